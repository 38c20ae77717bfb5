"""Deterministic 2-D structure rendering to SVG.

Layout is breadth-first radial placement from atom 0 with ring members put on
regular polygons. Aesthetics are best-effort; the contract is determinism plus
exact element counts: one line per bond, one text label per non-carbon or
charged atom.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from ..errors import ValidationError
from .parser import Molecule, parse_smiles

MIN_DIM = 64
MAX_DIM = 4096


def generate_smiles_image(text: str, width_px: int = 400, height_px: int = 300) -> str:
    for label, value in (("width_px", width_px), ("height_px", height_px)):
        if not isinstance(value, (int, float)) or not MIN_DIM <= value <= MAX_DIM:
            raise ValidationError(f"{label} must be within [{MIN_DIM}, {MAX_DIM}]", [label])
    mol = parse_smiles(text)
    positions = _layout(mol)
    return _render(mol, positions, int(width_px), int(height_px))


def _layout(mol: Molecule) -> dict[int, tuple[float, float]]:
    pos: dict[int, tuple[float, float]] = {}
    rings = _cycle_basis(mol)
    ring_of_atom: dict[int, list[int]] = {}
    for ring in rings:
        for idx in ring:
            ring_of_atom.setdefault(idx, ring)

    offset_x = 0.0
    for comp in mol.components():
        placed_before = len(pos)
        root = comp[0]
        pos[root] = (offset_x, 0.0)
        if root in ring_of_atom:
            _place_ring(mol, ring_of_atom[root], pos, anchor=root, direction=(1.0, 0.0))
        queue = [root]
        seen = {root}
        while queue:
            u = queue.pop(0)
            ux, uy = pos[u]
            unplaced = [v for v, _ in sorted(mol.neighbors(u), key=lambda t: t[0]) if v not in pos]
            for k, v in enumerate(unplaced):
                angle = _slot_angle(mol, u, pos, k, len(unplaced))
                pos[v] = (ux + math.cos(angle), uy + math.sin(angle))
                if v in ring_of_atom and any(w not in pos for w in ring_of_atom[v]):
                    _place_ring(mol, ring_of_atom[v], pos, anchor=v,
                                direction=(math.cos(angle), math.sin(angle)))
            for v, _ in sorted(mol.neighbors(u), key=lambda t: t[0]):
                if v not in seen and v in pos:
                    seen.add(v)
                    queue.append(v)
        comp_width = max((pos[i][0] for i in comp), default=0.0) - min((pos[i][0] for i in comp), default=0.0)
        offset_x += comp_width + 2.0
        del placed_before
    return pos


def _slot_angle(mol, u, pos, k, total) -> float:
    placed_neighbors = [pos[v] for v, _ in mol.neighbors(u) if v in pos]
    ux, uy = pos[u]
    if placed_neighbors:
        base = math.atan2(
            uy - sum(p[1] for p in placed_neighbors) / len(placed_neighbors),
            ux - sum(p[0] for p in placed_neighbors) / len(placed_neighbors),
        )
    else:
        base = 0.0
    spread = math.pi / 3
    return base + (k - (total - 1) / 2) * spread


def _place_ring(mol, ring, pos, anchor, direction) -> None:
    n = len(ring)
    radius = 0.5 / math.sin(math.pi / n)
    ax, ay = pos[anchor]
    cx, cy = ax + radius * direction[0], ay + radius * direction[1]
    order = ring[ring.index(anchor):] + ring[:ring.index(anchor)]
    base = math.atan2(ay - cy, ax - cx)
    for k, idx in enumerate(order):
        if idx in pos and idx != anchor:
            continue
        angle = base + 2 * math.pi * k / n
        pos[idx] = (cx + radius * math.cos(angle), cy + radius * math.sin(angle))


def _cycle_basis(mol: Molecule) -> list[list[int]]:
    """Fundamental cycles from a spanning forest, one per extra edge."""
    parent: dict[int, int | None] = {}
    depth: dict[int, int] = {}
    tree_edges: set[tuple] = set()
    for comp in mol.components():
        root = comp[0]
        parent[root] = None
        depth[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for v, bond in sorted(mol.neighbors(u), key=lambda t: t[0]):
                if v not in parent:
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    tree_edges.add(bond.key())
                    stack.append(v)
    cycles = []
    for bond in mol.bonds:
        if bond.key() in tree_edges:
            continue
        a, b = bond.a, bond.b
        path_a, path_b = [a], [b]
        while depth.get(path_a[-1], 0) > depth.get(path_b[-1], 0):
            path_a.append(parent[path_a[-1]])
        while depth.get(path_b[-1], 0) > depth.get(path_a[-1], 0):
            path_b.append(parent[path_b[-1]])
        while path_a[-1] != path_b[-1]:
            path_a.append(parent[path_a[-1]])
            path_b.append(parent[path_b[-1]])
        cycles.append(path_a + path_b[-2::-1])
    return cycles


def _render(mol: Molecule, positions: dict, width: int, height: int) -> str:
    xs = [p[0] for p in positions.values()]
    ys = [p[1] for p in positions.values()]
    min_x, max_x = min(xs), max(xs)
    min_y, max_y = min(ys), max(ys)
    span_x = max(max_x - min_x, 1e-6)
    span_y = max(max_y - min_y, 1e-6)
    margin = 0.1
    scale = min(width * (1 - 2 * margin) / span_x, height * (1 - 2 * margin) / span_y)

    def project(p):
        x = width / 2 + (p[0] - (min_x + max_x) / 2) * scale
        y = height / 2 + (p[1] - (min_y + max_y) / 2) * scale
        return round(x, 2), round(y, 2)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for bond in mol.bonds:
        x1, y1 = project(positions[bond.a])
        x2, y2 = project(positions[bond.b])
        width_attr = 2 if bond.order in (2, 3) else 1
        lines.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
            f'stroke="black" stroke-width="{width_attr}"/>'
        )
    font = max(10, int(scale * 0.35))
    for idx, atom in enumerate(mol.atoms):
        if atom.element == "C" and atom.charge == 0:
            continue
        x, y = project(positions[idx])
        label = atom.element
        if atom.charge:
            sign = "+" if atom.charge > 0 else "-"
            label += sign if abs(atom.charge) == 1 else f"{abs(atom.charge)}{sign}"
        lines.append(
            f'<text x="{x}" y="{y}" font-size="{font}" text-anchor="middle" '
            f'dominant-baseline="middle" font-family="Helvetica">{escape(label)}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines)
