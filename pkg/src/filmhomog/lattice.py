"""Scaled lattices, unit-cell choices, and tessellation of the parameter domain.

A unit-cell choice is (e1, e2, f, O): basis vectors spanning the cell, a
corner offset in basis units, and an origin.  At scale l the cell with
integer index m = (m1, m2) has corner

    corner(m) = O + l * B @ (m + f),        B = [e1 e2]

and occupies corner + l * B @ [0,1)^2 (half-open, so the plane is an exact
partition and atom-to-cell assignment is deterministic).  Cells fully inside
the domain are "full"; cells whose closed translate meets the complement but
still overlap the domain with positive area are "partial" and carry an exact
rectangle-parallelogram clip polygon.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyTessellation
from .geometry import Edge, Rectangle

_CONTAIN_TOL = 1e-12   # absolute slack for full-cell containment tests
_SNAP_TOL = 1e-9       # snap basis coordinates sitting on a cell boundary
_AREA_TOL_REL = 1e-12  # clip areas below this fraction of a cell are dropped


@dataclass(frozen=True)
class UnitCellChoice:
    """Basis vectors, corner offset (basis units) and origin of the tiling."""

    e1: tuple[float, float] = (1.0, 0.0)
    e2: tuple[float, float] = (0.0, 1.0)
    f: tuple[float, float] = (0.0, 0.0)
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if abs(np.linalg.det(self.basis)) <= 1e-12:
            raise ValueError("unit-cell basis vectors are linearly dependent")

    @property
    def basis(self) -> np.ndarray:
        return np.column_stack([self.e1, self.e2]).astype(float)

    @property
    def basis_inv(self) -> np.ndarray:
        return np.linalg.inv(self.basis)

    @property
    def cell_area(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    def corner(self, index: tuple[int, int], l: float) -> np.ndarray:
        m = np.asarray(index, float)
        return np.asarray(self.origin, float) + l * self.basis @ (m + np.asarray(self.f, float))

    def basis_coords(self, x_p: np.ndarray, l: float) -> np.ndarray:
        """Continuous cell coordinates: integer parts index the cell lattice."""
        x_p = np.asarray(x_p, float)
        rel = x_p - np.asarray(self.origin, float)
        c = rel @ self.basis_inv.T / l - np.asarray(self.f, float)
        # snap coordinates that sit on a cell boundary up to division fuzz
        nearest = np.round(c)
        snap = np.abs(c - nearest) <= _SNAP_TOL * np.maximum(1.0, np.abs(c))
        return np.where(snap, nearest, c)


def corner_map(x_p: np.ndarray, l: float, choice: UnitCellChoice) -> np.ndarray:
    """Corner of the (half-open) cell containing each point; shape follows input."""
    c = choice.basis_coords(x_p, l)
    m = np.floor(c)
    f = np.asarray(choice.f, float)
    corner = np.asarray(choice.origin, float) + l * (m + f) @ choice.basis.T
    return corner


def cell_index(x_p: np.ndarray, l: float, choice: UnitCellChoice) -> np.ndarray:
    """Integer lattice index of the cell containing each point."""
    return np.floor(choice.basis_coords(x_p, l)).astype(int)


@dataclass(frozen=True)
class Cell:
    """One tile of the tessellation (full, or clipped against the domain)."""

    index: tuple[int, int]
    corner: np.ndarray          # (2,)
    polygon: np.ndarray         # (K, 2) CCW vertices of the part inside T
    area: float
    is_full: bool

    def edge_span(self, edge: Edge, tol: float) -> Optional[tuple[float, float]]:
        """Interval of the domain edge covered by this cell, or None.

        The clip polygon has vertices exactly on the edge wherever it touches
        it with positive length; collect them and return their extent.
        """
        on_edge = np.abs(self.polygon[:, edge.axis] - edge.value) <= tol
        if np.count_nonzero(on_edge) < 2:
            return None
        s = self.polygon[on_edge, 1 - edge.axis]
        lo, hi = float(s.min()), float(s.max())
        if hi - lo <= tol:
            return None
        return lo, hi


@dataclass
class Tessellation:
    """Full and partial cells tiling a rectangular parameter domain."""

    domain: Rectangle
    l: float
    choice: UnitCellChoice
    full_cells: list[Cell] = field(default_factory=list)
    partial_cells: list[Cell] = field(default_factory=list)
    _by_index: dict = field(default_factory=dict, repr=False)

    @property
    def cells(self) -> list[Cell]:
        return self.full_cells + self.partial_cells

    @property
    def has_full_cells(self) -> bool:
        return bool(self.full_cells)

    def total_area(self) -> float:
        return float(sum(c.area for c in self.cells))

    def locate(self, x_p: np.ndarray) -> Optional[Cell]:
        """Cell containing a single point under the half-open convention."""
        idx = tuple(cell_index(np.asarray(x_p, float), self.l, self.choice))
        return self._by_index.get(idx)

    def boundary_spans(self, edge: Edge) -> list[tuple[float, float, Cell]]:
        """Sorted intervals of a domain edge covered by cells of the tiling.

        Consecutive spans share endpoints only (cells overlap on measure-zero
        sets); both full and partial cells appear.
        """
        tol = _CONTAIN_TOL * max(1.0, self.domain.diameter)
        spans = []
        for cell in self.cells:
            span = cell.edge_span(edge, tol)
            if span is not None:
                spans.append((span[0], span[1], cell))
        spans.sort(key=lambda t: (t[0], t[1]))
        return spans

    def corner_touching_indices(self) -> set:
        """Indices of cells covering positive length on two or more edges."""
        counts: dict = {}
        for edge in self.domain.edges():
            for _, _, cell in self.boundary_spans(edge):
                counts[cell.index] = counts.get(cell.index, 0) + 1
        return {idx for idx, n in counts.items() if n >= 2}


def _clip_polygon_to_rectangle(poly: np.ndarray, rect: Rectangle) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon against the rectangle."""
    result = [tuple(p) for p in np.asarray(poly, float)]
    halfplanes = [
        (0, rect.lo[0], +1.0),
        (0, rect.hi[0], -1.0),
        (1, rect.lo[1], +1.0),
        (1, rect.hi[1], -1.0),
    ]
    for axis, value, sign in halfplanes:
        if not result:
            break
        clipped = []
        n = len(result)
        for i in range(n):
            cur = result[i]
            nxt = result[(i + 1) % n]
            cur_in = sign * (cur[axis] - value) >= 0.0
            nxt_in = sign * (nxt[axis] - value) >= 0.0
            if cur_in:
                clipped.append(cur)
            if cur_in != nxt_in:
                t = (value - cur[axis]) / (nxt[axis] - cur[axis])
                pt = (
                    cur[0] + t * (nxt[0] - cur[0]),
                    cur[1] + t * (nxt[1] - cur[1]),
                )
                # the clipped coordinate is exactly on the clip line
                pt = (value, pt[1]) if axis == 0 else (pt[0], value)
                clipped.append(pt)
        result = clipped
    return np.asarray(result, float).reshape(-1, 2)


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def tessellate(domain: Rectangle, l: float, choice: UnitCellChoice) -> Tessellation:
    """Enumerate full and partial cells of the scaled tiling over the domain.

    Candidate indices come from the basis-coordinate bounding box of the
    domain inflated by one cell; classification is exact up to a containment
    tolerance of 1e-12 (absolute, domain units).
    """
    if not (0.0 < l <= 1.0):
        raise ValueError(f"scale l must lie in (0, 1], got {l}")
    tol = _CONTAIN_TOL * max(1.0, domain.diameter)
    area_floor = _AREA_TOL_REL * choice.cell_area * l * l

    coords = choice.basis_coords(domain.corners(), l)
    m_lo = np.floor(coords.min(axis=0)).astype(int) - 1
    m_hi = np.ceil(coords.max(axis=0)).astype(int) + 1

    unit_square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    B = choice.basis
    tess = Tessellation(domain=domain, l=l, choice=choice)
    for m1 in range(m_lo[0], m_hi[0] + 1):
        for m2 in range(m_lo[1], m_hi[1] + 1):
            corner = choice.corner((m1, m2), l)
            poly = corner + l * unit_square @ B.T
            if np.all(domain.contains(poly, tol=tol)):
                cell = Cell(
                    index=(m1, m2),
                    corner=corner,
                    polygon=poly,
                    area=_polygon_area(poly),
                    is_full=True,
                )
                tess.full_cells.append(cell)
            else:
                clipped = _clip_polygon_to_rectangle(poly, domain)
                area = _polygon_area(clipped)
                if area > area_floor:
                    cell = Cell(
                        index=(m1, m2),
                        corner=corner,
                        polygon=clipped,
                        area=area,
                        is_full=False,
                    )
                    tess.partial_cells.append(cell)

    tess.full_cells.sort(key=lambda c: c.index)
    tess.partial_cells.sort(key=lambda c: c.index)
    tess._by_index = {c.index: c for c in tess.cells}
    if not tess.full_cells:
        warnings.warn(
            "no full cell fits in the domain; partial cells still tile it",
            EmptyTessellation,
        )
    return tess
