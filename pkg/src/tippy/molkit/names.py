"""Chemical name to SMILES lookup over the bundled compound table."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import UnknownNameError, ValidationError
from ..fuzzy import fuzzy_score

FUZZY_THRESHOLD = 0.72  # stricter than actor lookup: a wrong hit changes the chemistry

_DATA_DIR = Path(__file__).parent / "data"
_TABLE_CACHE: dict[str, str] | None = None


def name_table() -> dict[str, str]:
    global _TABLE_CACHE
    if _TABLE_CACHE is None:
        _TABLE_CACHE = json.loads((_DATA_DIR / "compound_names.json").read_text(encoding="utf-8"))
    return _TABLE_CACHE


def smiles_from_molecule_name(name: str, threshold: float = FUZZY_THRESHOLD) -> dict:
    """Exact case-insensitive match first, fuzzy fallback above 0.72.

    Returns {smiles, matched_name, confidence}; raises UnknownNameError with
    the top-3 candidates when nothing clears the threshold.
    """
    if not name or not name.strip():
        raise ValidationError("name must be non-empty", ["name"])
    table = name_table()
    key = name.strip().lower()
    if key in table:
        return {"smiles": table[key], "matched_name": key, "confidence": 1.0}
    scored = sorted(
        ((fuzzy_score(name, candidate), candidate) for candidate in table),
        key=lambda t: (-t[0], t[1]),
    )
    best_score, best_name = scored[0]
    if best_score < threshold:
        raise UnknownNameError(name, [candidate for _, candidate in scored[:3]])
    return {"smiles": table[best_name], "matched_name": best_name, "confidence": round(best_score, 6)}
