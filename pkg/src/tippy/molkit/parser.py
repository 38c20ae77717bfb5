"""SMILES subset parser and deterministic re-emitter.

Grammar: organic-subset atoms (B C N O P S F Cl Br I, aromatic b c n o s p),
bracket atoms with isotope / charge / explicit H, bond symbols - = # :,
parenthesised branches, ring closures (digits and %nn), dot-separated
components. Stereo markers (/ \\ @ @@) are accepted and ignored.

Implicit hydrogens come from default valences (B3 C4 N3 O2 P3 S2, halogens 1).
An aromatic atom spends one extra unit of valence on its ring system and its
implicit-H count clamps at zero; an aliphatic organic-subset atom whose bonds
exceed its default valence is a parse error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import SmilesParseError, ValidationError

AROMATIC = "aromatic"  # bond order marker

DEFAULT_VALENCE = {
    "B": 3, "C": 4, "N": 3, "O": 2, "P": 3, "S": 2,
    "F": 1, "Cl": 1, "Br": 1, "I": 1,
}
ORGANIC_AROMATIC = ("b", "c", "n", "o", "p", "s")
HALOGENS = ("F", "Cl", "Br", "I")

_DATA_DIR = Path(__file__).parent / "data"
_MASSES_CACHE: dict[str, float] | None = None


def atomic_masses() -> dict[str, float]:
    global _MASSES_CACHE
    if _MASSES_CACHE is None:
        _MASSES_CACHE = json.loads((_DATA_DIR / "atomic_masses.json").read_text(encoding="utf-8"))
    return _MASSES_CACHE


@dataclass
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    isotope: int | None = None
    explicit_h: int | None = None  # None => derive from default valence
    bracket: bool = False

    def copy(self) -> "Atom":
        return Atom(self.element, self.aromatic, self.charge, self.isotope, self.explicit_h, self.bracket)


@dataclass
class Bond:
    a: int
    b: int
    order: object  # 1 | 2 | 3 | AROMATIC

    def key(self) -> tuple[int, int]:
        return (min(self.a, self.b), max(self.a, self.b))

    def numeric_order(self) -> int:
        return 1 if self.order == AROMATIC else int(self.order)


@dataclass
class Molecule:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)
    source_smiles: str = ""

    def neighbors(self, idx: int) -> list[tuple[int, Bond]]:
        out = []
        for bond in self.bonds:
            if bond.a == idx:
                out.append((bond.b, bond))
            elif bond.b == idx:
                out.append((bond.a, bond))
        return out

    def degree(self, idx: int) -> int:
        return len(self.neighbors(idx))

    def hydrogens(self, idx: int) -> int:
        """Explicit H count for bracket atoms, default-valence arithmetic otherwise."""
        atom = self.atoms[idx]
        if atom.explicit_h is not None:
            return atom.explicit_h
        used = sum(bond.numeric_order() for _, bond in self.neighbors(idx))
        if atom.aromatic:
            used += 1  # membership in one aromatic system
        valence = DEFAULT_VALENCE.get(atom.element)
        if valence is None:
            return 0
        free = valence - used
        if atom.aromatic:
            return max(0, free)
        if free < 0:
            raise ValidationError(f"valence overflow on atom {idx} ({atom.element})")
        return free

    def components(self) -> list[list[int]]:
        seen: set[int] = set()
        comps = []
        for start in range(len(self.atoms)):
            if start in seen:
                continue
            stack = [start]
            comp = []
            seen.add(start)
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self.neighbors(u):
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            comps.append(sorted(comp))
        return comps

    def ring_count(self) -> int:
        """Cyclomatic count: bonds - atoms + connected components."""
        return len(self.bonds) - len(self.atoms) + len(self.components())

    def check(self) -> None:
        n = len(self.atoms)
        seen_pairs: set[tuple] = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValidationError("bond endpoint out of range")
            if bond.a == bond.b:
                raise ValidationError("bond endpoints must differ")
            if bond.key() in seen_pairs:
                raise ValidationError("duplicate bond pair")
            seen_pairs.add(bond.key())
        for idx in range(n):
            self.hydrogens(idx)  # raises on aliphatic valence overflow


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self) -> str:
        ch = self.peek()
        self.pos += 1
        return ch

    def error(self, message: str, offset: int | None = None):
        raise SmilesParseError(message, self.pos if offset is None else offset)


def parse_smiles(text: str) -> Molecule:
    if not text:
        raise SmilesParseError("empty SMILES", 0)
    sc = _Scanner(text)
    mol = Molecule(source_smiles=text)
    prev_atom: int | None = None
    pending_bond: object | None = None
    pending_bond_pos = 0
    branch_stack: list[tuple[int | None, int]] = []  # (atom to return to, '(' offset)
    open_rings: dict[int, tuple[int, object | None, int]] = {}  # num -> (atom, bond, offset)

    while sc.pos < len(sc.text):
        start = sc.pos
        ch = sc.peek()
        if ch in "-=#:":
            if pending_bond is not None:
                sc.error("two bond symbols in a row")
            sc.take()
            pending_bond = {"-": 1, "=": 2, "#": 3, ":": AROMATIC}[ch]
            pending_bond_pos = start
            continue
        if ch in "/\\":
            sc.take()  # stereo bond marker: accepted, treated as single
            if pending_bond is None:
                pending_bond = 1
                pending_bond_pos = start
            continue
        if ch == ".":
            if pending_bond is not None:
                sc.error("bond symbol before dot", pending_bond_pos)
            sc.take()
            prev_atom = None
            continue
        if ch == "(":
            if prev_atom is None:
                sc.error("branch with no preceding atom")
            if pending_bond is not None:
                sc.error("bond symbol before branch", pending_bond_pos)
            sc.take()
            branch_stack.append((prev_atom, start))
            continue
        if ch == ")":
            if not branch_stack:
                sc.error("unbalanced parenthesis")
            if pending_bond is not None:
                sc.error("dangling bond symbol", pending_bond_pos)
            sc.take()
            prev_atom = branch_stack.pop()[0]
            continue
        if ch.isdigit() or ch == "%":
            if prev_atom is None:
                sc.error("ring closure with no preceding atom")
            if ch == "%":
                sc.take()
                digits = sc.text[sc.pos:sc.pos + 2]
                if len(digits) != 2 or not digits.isdigit():
                    sc.error("% must be followed by two digits", start)
                sc.pos += 2
                num = int(digits)
            else:
                num = int(sc.take())
            _close_or_open_ring(mol, open_rings, num, prev_atom, pending_bond, start, sc)
            pending_bond = None
            continue
        atom = _scan_atom(sc)
        idx = len(mol.atoms)
        mol.atoms.append(atom)
        if prev_atom is not None:
            order = pending_bond
            if order is None:
                order = AROMATIC if (mol.atoms[prev_atom].aromatic and atom.aromatic) else 1
            _add_bond(mol, prev_atom, idx, order, start, sc)
        pending_bond = None
        prev_atom = idx

    if pending_bond is not None:
        raise SmilesParseError("dangling bond symbol", pending_bond_pos)
    if branch_stack:
        raise SmilesParseError("unbalanced parenthesis", len(text))
    if open_rings:
        num, (_, _, offset) = sorted(open_rings.items())[0]
        raise SmilesParseError(f"unclosed ring bond {num}", offset)
    try:
        mol.check()
    except ValidationError as exc:
        raise SmilesParseError(str(exc), max(0, len(text) - 1)) from exc
    return mol


def _close_or_open_ring(mol, open_rings, num, prev_atom, pending_bond, offset, sc) -> None:
    if num in open_rings:
        other, other_bond, _ = open_rings.pop(num)
        if other == prev_atom:
            sc.error("ring bond to the same atom", offset)
        if pending_bond is not None and other_bond is not None and pending_bond != other_bond:
            sc.error("conflicting ring bond orders", offset)
        order = pending_bond if pending_bond is not None else other_bond
        if order is None:
            order = AROMATIC if (mol.atoms[other].aromatic and mol.atoms[prev_atom].aromatic) else 1
        _add_bond(mol, other, prev_atom, order, offset, sc)
    else:
        open_rings[num] = (prev_atom, pending_bond, offset)


def _add_bond(mol, a, b, order, offset, sc) -> None:
    pair = (min(a, b), max(a, b))
    if any(bond.key() == pair for bond in mol.bonds):
        sc.error("duplicate bond pair", offset)
    mol.bonds.append(Bond(a, b, order))


def _scan_atom(sc: _Scanner) -> Atom:
    ch = sc.peek()
    if ch == "[":
        return _scan_bracket_atom(sc)
    two = sc.text[sc.pos:sc.pos + 2]
    if two in ("Cl", "Br"):
        sc.pos += 2
        return Atom(element=two)
    if ch in "BCNOPSFI":
        sc.take()
        return Atom(element=ch)
    if ch in ORGANIC_AROMATIC:
        sc.take()
        return Atom(element=ch.upper(), aromatic=True)
    sc.error(f"unknown element {ch!r}" if ch.isalpha() else f"unexpected character {ch!r}")


def _scan_bracket_atom(sc: _Scanner) -> Atom:
    start = sc.pos
    sc.take()  # '['
    isotope = None
    digits = ""
    while sc.peek().isdigit():
        digits += sc.take()
    if digits:
        isotope = int(digits)
    ch = sc.peek()
    aromatic = False
    if ch.isupper():
        element = sc.take()
        nxt = sc.peek()
        if nxt.islower() and (element + nxt) in atomic_masses():
            element += sc.take()
    elif ch in ORGANIC_AROMATIC:
        element = sc.take().upper()
        aromatic = True
    else:
        sc.error("expected element symbol in bracket atom")
        return  # unreachable
    if element not in atomic_masses():
        sc.error(f"unknown element {element!r}", start)
    while sc.peek() == "@":
        sc.take()  # chirality: accepted, ignored
    explicit_h = 0
    if sc.peek() == "H":
        sc.take()
        digits = ""
        while sc.peek().isdigit():
            digits += sc.take()
        explicit_h = int(digits) if digits else 1
    charge = 0
    if sc.peek() in "+-":
        sign = 1 if sc.take() == "+" else -1
        digits = ""
        while sc.peek().isdigit():
            digits += sc.take()
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while sc.peek() == ("+" if sign > 0 else "-"):
                sc.take()
                charge += sign
    if sc.peek() == ":":
        sc.take()  # atom class: accepted, ignored
        while sc.peek().isdigit():
            sc.take()
    if sc.peek() != "]":
        sc.error("unterminated bracket atom", start)
    sc.take()
    return Atom(element=element, aromatic=aromatic, charge=charge,
                isotope=isotope, explicit_h=explicit_h, bracket=True)


# --- deterministic emission ---

def to_smiles(mol: Molecule) -> str:
    """Deterministic SMILES emission.

    Each component starts at its atom with the smallest (degree, element,
    index) key and is walked depth-first visiting lower-index neighbors
    first; ring-closure digits are allocated smallest-free-first. Re-parsing
    the output preserves formula, mass, ring count, and the bond-order
    multiset.
    """
    if not mol.atoms:
        raise ValidationError("cannot emit an empty molecule")
    entries = []
    for comp in mol.components():
        start = min(comp, key=lambda i: (mol.degree(i), mol.atoms[i].element, i))
        entries.append(((mol.degree(start), mol.atoms[start].element, start), start, comp))
    entries.sort(key=lambda e: e[0])
    pieces = [_emit_component(mol, start, set(comp)) for _, start, comp in entries]
    return ".".join(pieces)


def _emit_component(mol: Molecule, start: int, comp: set[int]) -> str:
    tree_edges = _dfs_tree_edges(mol, start)
    ring_edges = {
        bond.key() for bond in mol.bonds
        if bond.a in comp and bond.key() not in tree_edges
    }
    state = {"ring_num": {}, "in_use": set()}
    out: list[str] = []
    _emit_atom(mol, start, None, set(), tree_edges, ring_edges, state, out)
    return "".join(out)


def _dfs_tree_edges(mol: Molecule, start: int) -> set[tuple]:
    tree: set[tuple] = set()
    visited = {start}
    stack = [(start, iter(sorted(mol.neighbors(start), key=lambda t: t[0])))]
    while stack:
        u, it = stack[-1]
        for v, bond in it:
            if v not in visited:
                visited.add(v)
                tree.add(bond.key())
                stack.append((v, iter(sorted(mol.neighbors(v), key=lambda t: t[0]))))
                break
        else:
            stack.pop()
    return tree


def _emit_atom(mol, idx, parent_bond, visited, tree_edges, ring_edges, state, out) -> None:
    visited.add(idx)
    out.append(_atom_text(mol, idx))
    neighbor_list = sorted(mol.neighbors(idx), key=lambda t: t[0])
    for v, bond in neighbor_list:
        key = bond.key()
        if key not in ring_edges:
            continue
        ring_num = state["ring_num"]
        if key not in ring_num:
            num = 1
            while num in state["in_use"]:
                num += 1
            state["in_use"].add(num)
            ring_num[key] = num
            out.append(_bond_text(mol, bond) + _ring_digit(num))
        elif ring_num[key] is not None:
            num = ring_num[key]
            out.append(_ring_digit(num))
            state["in_use"].discard(num)
            ring_num[key] = None  # closed
    children = [
        (v, bond) for v, bond in neighbor_list
        if bond.key() in tree_edges and v not in visited
    ]
    for i, (v, bond) in enumerate(children):
        sub: list[str] = [_bond_text(mol, bond)]
        _emit_atom(mol, v, bond, visited, tree_edges, ring_edges, state, sub)
        if i < len(children) - 1:
            out.append("(" + "".join(sub) + ")")
        else:
            out.append("".join(sub))


def _ring_digit(num: int) -> str:
    return str(num) if num < 10 else f"%{num:02d}"


def _bond_text(mol: Molecule, bond: Bond) -> str:
    a_arom = mol.atoms[bond.a].aromatic
    b_arom = mol.atoms[bond.b].aromatic
    if bond.order == 2:
        return "="
    if bond.order == 3:
        return "#"
    if bond.order == AROMATIC:
        return "" if (a_arom and b_arom) else ":"
    # single bond needs an explicit '-' only between two aromatic atoms
    return "-" if (a_arom and b_arom) else ""


def _atom_text(mol: Molecule, idx: int) -> str:
    atom = mol.atoms[idx]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if not atom.bracket and atom.charge == 0 and atom.isotope is None and atom.explicit_h is None:
        return symbol
    h = atom.explicit_h if atom.explicit_h is not None else mol.hydrogens(idx)
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if h == 1:
        parts.append("H")
    elif h > 1:
        parts.append(f"H{h}")
    if atom.charge != 0:
        sign = "+" if atom.charge > 0 else "-"
        magnitude = abs(atom.charge)
        parts.append(sign if magnitude == 1 else f"{sign}{magnitude}")
    parts.append("]")
    return "".join(parts)
