"""Derived molecular properties: Hill formula, mass, H-bond counts, and the
fictional logP surrogate.

logp_est = 0.25*#C - 0.6*(#N + #O) + 0.35*#halogen is a deliberately simple
linear stand-in for a property model; it exists so every downstream number
(HPLC retention, generation scores) is reproducible, and it claims no
predictive accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

from .parser import HALOGENS, Molecule, atomic_masses, parse_smiles


@dataclass
class MoleculeInfo:
    formula: str
    mw: float
    heavy_atoms: int
    rings: int
    hbd: int
    hba: int
    logp_est: float

    def to_dict(self) -> dict:
        return {
            "formula": self.formula, "mw": self.mw, "heavy_atoms": self.heavy_atoms,
            "rings": self.rings, "hbd": self.hbd, "hba": self.hba, "logp_est": self.logp_est,
        }


def element_counts(mol: Molecule) -> dict[str, int]:
    """Element histogram including implicit and bracket hydrogens."""
    counts: dict[str, int] = {}
    for idx, atom in enumerate(mol.atoms):
        counts[atom.element] = counts.get(atom.element, 0) + 1
        h = mol.hydrogens(idx)
        if h:
            counts["H"] = counts.get("H", 0) + h
    return counts


def hill_formula(counts: dict[str, int]) -> str:
    """Hill order: C first, H second, then alphabetical; fully alphabetical
    (H included) when there is no carbon."""
    parts = []
    remaining = dict(counts)
    if "C" in remaining:
        for el in ("C", "H"):
            if el in remaining:
                parts.append(_formula_term(el, remaining.pop(el)))
    for el in sorted(remaining):
        parts.append(_formula_term(el, remaining[el]))
    return "".join(parts)


def _formula_term(element: str, count: int) -> str:
    return element if count == 1 else f"{element}{count}"


def molecular_weight(mol: Molecule) -> float:
    masses = atomic_masses()
    total = 0.0
    for idx, atom in enumerate(mol.atoms):
        if atom.isotope is not None:
            total += float(atom.isotope)  # mass number stands in for isotope mass
        else:
            total += masses[atom.element]
        total += mol.hydrogens(idx) * masses["H"]
    return total


def molecule_info(mol: Molecule) -> MoleculeInfo:
    counts = element_counts(mol)
    n_c = counts.get("C", 0)
    n_n = counts.get("N", 0)
    n_o = counts.get("O", 0)
    n_hal = sum(counts.get(h, 0) for h in HALOGENS)
    hbd = hba = 0
    for idx, atom in enumerate(mol.atoms):
        if atom.element in ("N", "O"):
            hba += 1
            if mol.hydrogens(idx) >= 1:
                hbd += 1
    heavy = sum(1 for atom in mol.atoms if atom.element != "H")
    return MoleculeInfo(
        formula=hill_formula(counts),
        mw=round(molecular_weight(mol), 3),
        heavy_atoms=heavy,
        rings=mol.ring_count(),
        hbd=hbd,
        hba=hba,
        logp_est=round(0.25 * n_c - 0.6 * (n_n + n_o) + 0.35 * n_hal, 6),
    )


def molecule_info_from_smiles(text: str) -> MoleculeInfo:
    return molecule_info(parse_smiles(text))
