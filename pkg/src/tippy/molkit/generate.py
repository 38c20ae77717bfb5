"""Seeded hill-climbing molecule generator standing in for a GPU model.

Mutation operators: append a terminal C/N/O, delete a terminal atom, swap a
halogen around the F->Cl->Br cycle, toggle a non-ring bond between single and
double where valence permits. A candidate is kept only when its re-emitted
SMILES parses and strictly improves the score.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import ValidationError
from ..util import stable_hash64
from .parser import AROMATIC, DEFAULT_VALENCE as _DEFAULTS, Atom, Bond, Molecule, parse_smiles, to_smiles
from .properties import molecule_info

SCORABLE_PROPERTIES = ("mw", "logp_est", "rings", "hbd", "hba")
MODES = ("maximize", "minimize", "target")
HALOGEN_CYCLE = {"F": "Cl", "Cl": "Br", "Br": "F"}


@dataclass
class ScoreSpec:
    property: str
    mode: str
    target_value: float | None = None

    def check(self) -> None:
        if self.property not in SCORABLE_PROPERTIES:
            raise ValidationError(f"unknown property {self.property!r}", ["property"])
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}", ["mode"])
        if (self.target_value is not None) != (self.mode == "target"):
            raise ValidationError("target_value present iff mode=target", ["target_value"])

    def score(self, mol: Molecule) -> float:
        value = getattr(molecule_info(mol), self.property)
        if self.mode == "maximize":
            return float(value)
        if self.mode == "minimize":
            return -float(value)
        return -abs(float(value) - float(self.target_value))

    def key(self) -> str:
        return f"{self.property}:{self.mode}:{self.target_value}"


def molmim_generate(seed_smiles: str, score_spec: ScoreSpec, n_iterations: int = 200,
                    seed: int = 0, top_k: int = 5) -> list[dict]:
    score_spec.check()
    if n_iterations < 1:
        raise ValidationError("n_iterations must be >= 1", ["n_iterations"])
    if top_k < 1:
        raise ValidationError("top_k must be >= 1", ["top_k"])
    mol = parse_smiles(seed_smiles)
    rng = random.Random(stable_hash64(seed, seed_smiles, score_spec.key()))

    current = mol
    current_score = score_spec.score(mol)
    pool: dict[str, float] = {to_smiles(mol): current_score}

    for _ in range(n_iterations):
        candidate = _mutate(current, rng)
        if candidate is None:
            continue
        try:
            emitted = to_smiles(candidate)
            reparsed = parse_smiles(emitted)
        except Exception:
            continue
        cand_score = score_spec.score(reparsed)
        if cand_score > current_score:
            current, current_score = reparsed, cand_score
            pool[emitted] = cand_score

    ranked = sorted(pool.items(), key=lambda kv: (-kv[1], kv[0]))
    return [{"smiles": smi, "score": round(sc, 6)} for smi, sc in ranked[:top_k]]


def _mutate(mol: Molecule, rng: random.Random) -> Molecule | None:
    adj: dict[int, list[Bond]] = {i: [] for i in range(len(mol.atoms))}
    for bond in mol.bonds:
        adj[bond.a].append(bond)
        adj[bond.b].append(bond)

    def free_valence(idx: int) -> int:
        atom = mol.atoms[idx]
        if atom.explicit_h is not None:
            return atom.explicit_h
        valence = _DEFAULTS.get(atom.element)
        if valence is None:
            return 0
        used = sum(b.numeric_order() for b in adj[idx]) + (1 if atom.aromatic else 0)
        return max(0, valence - used)

    moves: list[tuple] = []
    for idx, atom in enumerate(mol.atoms):
        if atom.explicit_h is None and not atom.aromatic and free_valence(idx) >= 1:
            moves.append(("append", idx))
        if len(adj[idx]) <= 1 and len(mol.atoms) >= 2:
            moves.append(("delete", idx))
        if atom.element in HALOGEN_CYCLE and not atom.bracket:
            moves.append(("swap_halogen", idx))
    ring_keys = _ring_bond_keys(mol, adj)
    for b_idx, bond in enumerate(mol.bonds):
        if bond.key() in ring_keys or bond.order == AROMATIC or bond.order == 3:
            continue
        if bond.order == 2:
            moves.append(("toggle_bond", b_idx))
        elif bond.order == 1 and free_valence(bond.a) >= 1 and free_valence(bond.b) >= 1:
            moves.append(("toggle_bond", b_idx))
    if not moves:
        return None
    kind, target = moves[rng.randrange(len(moves))]
    out = _copy(mol)
    if kind == "append":
        element = rng.choice(("C", "N", "O"))
        out.atoms.append(Atom(element=element))
        out.bonds.append(Bond(target, len(out.atoms) - 1, 1))
    elif kind == "delete":
        out = _delete_atom(out, target)
        if out is None:
            return None
    elif kind == "swap_halogen":
        out.atoms[target].element = HALOGEN_CYCLE[out.atoms[target].element]
    elif kind == "toggle_bond":
        bond = out.bonds[target]
        bond.order = 1 if bond.order == 2 else 2
    try:
        out.check()
    except Exception:
        return None
    return out


def _ring_bond_keys(mol: Molecule, adj: dict[int, list[Bond]]) -> set[tuple]:
    """Bonds on cycles = all bonds minus bridges (iterative low-link)."""
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    bridges: set[tuple] = set()
    timer = 0
    for root in range(len(mol.atoms)):
        if root in disc:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack: list[tuple[int, tuple | None, object]] = [(root, None, iter(adj[root]))]
        while stack:
            u, parent_key, it = stack[-1]
            advanced = False
            for bond in it:
                v = bond.b if bond.a == u else bond.a
                key = bond.key()
                if key == parent_key:
                    continue
                if v not in disc:
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, key, iter(adj[v])))
                    advanced = True
                    break
                low[u] = min(low[u], disc[v])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.add(parent_key)
    return {b.key() for b in mol.bonds} - bridges


def _copy(mol: Molecule) -> Molecule:
    return Molecule(
        atoms=[a.copy() for a in mol.atoms],
        bonds=[Bond(b.a, b.b, b.order) for b in mol.bonds],
        source_smiles=mol.source_smiles,
    )


def _delete_atom(mol: Molecule, idx: int) -> Molecule | None:
    if len(mol.atoms) <= 1:
        return None
    atoms = [a.copy() for i, a in enumerate(mol.atoms) if i != idx]
    bonds = []
    for b in mol.bonds:
        if idx in (b.a, b.b):
            continue
        bonds.append(Bond(
            b.a - 1 if b.a > idx else b.a,
            b.b - 1 if b.b > idx else b.b,
            b.order,
        ))
    return Molecule(atoms=atoms, bonds=bonds)
