"""Exact microscopic potentials and the three homogenized limit potentials.

Everything uses the bare-Coulomb kernel G(r, r') = 1/|r - r'| (no 1/4pi; a
physics-convention rescale is applied at the CLI layer only, which is exact
by linearity).

The microscopic potential is the exact finite Green's sum over all realized
point charges, accumulated with exactly-rounded summation.  The homogenized
potentials are parameter-space integrals over the film domain T and its
boundary, with all source fields premultiplied by the surface Jacobian:

    thin-over-wide limit (R1):
        Phi(r) = INT_T G * (q*J0 - div_p(J0 p_p)) dx
               + INT_dT G * (sigma*J0 + (J0 p_p).n) ds

    proportional limit (R2, h = alpha l):
        Phi(r) = alpha * [R1 form] + alpha^2 * INT_T dG/dnu' * (p3*J0) dx

    wide-over-thin limit (R3):
        Phi(r) = INT_T [G * q*J0 + dG/dnu' * p3*J0] dx

with dG/dnu' = nu(r') . (r - r') / |r - r'|^3 evaluated analytically.  The
boundary integral runs in parameter arc length with the parameter-space
outward normal, exactly the object the cell sums converge to; the boundary
charge enters as per-segment constants from the tessellation data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .charge import ScaledChargeDistribution
from .errors import SingularEvaluation, StandoffViolation
from .geometry import ParametricMap, Rectangle, surface_frame
from .moments import MomentFields
from .quadrature import adaptive_rectangle, adaptive_segment

_SINGULAR_DIST = 1e-12
DEFAULT_TOL = 1e-9
DEFAULT_MAX_DEPTH = 12


def green(r: np.ndarray, r_prime: np.ndarray) -> np.ndarray:
    """Free-space kernel 1/|r - r'|; batched inputs broadcast."""
    r = np.asarray(r, float)
    r_prime = np.asarray(r_prime, float)
    dist = np.linalg.norm(r - r_prime, axis=-1)
    if np.any(dist < _SINGULAR_DIST):
        raise SingularEvaluation("kernel evaluated at coincident points")
    out = 1.0 / dist
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# observation grids and samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObservationGrid:
    """Observation points with their minimum distance to the mid-surface."""

    points: np.ndarray  # (M, 3)
    standoff: float

    @classmethod
    def from_points(cls, points: np.ndarray, pmap: ParametricMap, n_dense: int = 201) -> "ObservationGrid":
        """Wrap explicit points; standoff measured against a dense surface sample."""
        points = np.atleast_2d(np.asarray(points, float))
        d = cls._min_distance(points, pmap, n_dense)
        if d <= 0.0 or not math.isfinite(d):
            raise StandoffViolation(
                f"observation grid touches the film (standoff {d:.3e}; must be positive)"
            )
        return cls(points=points, standoff=d)

    @classmethod
    def offset_surface(
        cls, pmap: ParametricMap, n1: int, n2: int, distance: float, n_dense: int = 201
    ) -> "ObservationGrid":
        """n1 x n2 grid pushed off the mid-surface along its normal."""
        dom = pmap.domain
        u = np.linspace(dom.lo[0], dom.hi[0], n1)
        v = np.linspace(dom.lo[1], dom.hi[1], n2)
        U, V = np.meshgrid(u, v, indexing="ij")
        x_p = np.stack([U.ravel(), V.ravel()], axis=-1)
        fr = surface_frame(pmap, x_p)
        pts = fr.point + distance * fr.normal
        return cls.from_points(pts, pmap, n_dense)

    @classmethod
    def plane(
        cls,
        pmap: ParametricMap,
        n1: int,
        n2: int,
        extent: Rectangle,
        height: float,
        n_dense: int = 201,
    ) -> "ObservationGrid":
        """n1 x n2 grid on the physical plane z = height over the given extent."""
        u = np.linspace(extent.lo[0], extent.hi[0], n1)
        v = np.linspace(extent.lo[1], extent.hi[1], n2)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.stack([U.ravel(), V.ravel(), np.full(U.size, float(height))], axis=-1)
        return cls.from_points(pts, pmap, n_dense)

    @staticmethod
    def _min_distance(points: np.ndarray, pmap: ParametricMap, n_dense: int) -> float:
        dom = pmap.domain
        u = np.linspace(dom.lo[0], dom.hi[0], n_dense)
        v = np.linspace(dom.lo[1], dom.hi[1], n_dense)
        U, V = np.meshgrid(u, v, indexing="ij")
        surf = pmap.midsurface(np.stack([U.ravel(), V.ravel()], axis=-1))
        d_min = math.inf
        for p in points:
            d = np.sqrt(np.sum((surf - p) ** 2, axis=-1)).min()
            d_min = min(d_min, float(d))
        return d_min

    @property
    def n_points(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class FieldSample:
    """Potential values on a grid, tagged with how they were produced."""

    grid: ObservationGrid
    values: np.ndarray  # (M,)
    provenance: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field sample contains non-finite values")


# ---------------------------------------------------------------------------
# microscopic potential
# ---------------------------------------------------------------------------


def direct_potential(
    dist: ScaledChargeDistribution,
    grid: ObservationGrid,
    standoff_factor: float = 10.0,
    threads: int = 1,
) -> FieldSample:
    """Exact Green's sum of all realized charges at every observation point.

    Per-point accumulation uses math.fsum, so values are exactly rounded and
    independent of enumeration order; with ``threads`` > 1 observation points
    are evaluated concurrently, which cannot change the result (each point is
    reduced independently and written by index).  ``standoff_factor`` guards
    the asymptotic regime (standoff >= factor * max(l, h)); convergence
    studies pass 0 to evaluate coarse steps on purpose.
    """
    limit = standoff_factor * max(dist.l, dist.h)
    if grid.standoff < limit:
        raise StandoffViolation(
            f"grid standoff {grid.standoff:.4g} < {standoff_factor:g} * max(l, h) = {limit:.4g}"
        )

    def at_point(p):
        d = np.sqrt(np.sum((dist.positions - p) ** 2, axis=-1))
        if d.size and d.min() < _SINGULAR_DIST:
            raise SingularEvaluation("observation point coincides with a charge")
        return math.fsum((dist.magnitudes / d).tolist()) if d.size else 0.0

    if threads > 1 and grid.n_points > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = np.fromiter(pool.map(at_point, grid.points), dtype=float, count=grid.n_points)
    else:
        values = np.fromiter((at_point(p) for p in grid.points), dtype=float, count=grid.n_points)
    tag = f"microscopic(l={dist.l:g} h={dist.h:g} {dist.regime.label()})"
    return FieldSample(grid=grid, values=values, provenance=tag)


# ---------------------------------------------------------------------------
# homogenized potentials
# ---------------------------------------------------------------------------


def _kernel_parts(pmap: ParametricMap, x_p: np.ndarray, obs: np.ndarray, need_normal: bool):
    """G and (optionally) dG/dnu' between surface points x_p and grid points."""
    fr = surface_frame(pmap, x_p)
    diff = obs[None, :, :] - fr.point[:, None, :]  # (N, M, 3)
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    G = 1.0 / d
    if not need_normal:
        return G, None, fr
    dot = np.sum(diff * fr.normal[:, None, :], axis=-1)
    return G, dot / d**3, fr


def _bulk_integral(
    fields: MomentFields,
    pmap: ParametricMap,
    grid: ObservationGrid,
    coef_single: float,
    coef_double: float,
    tol: float,
    max_depth: int,
) -> np.ndarray:
    """INT_T [c1 G (q J0 - div(J0 p)) + c2 dG/dnu' p3 J0] dx."""
    obs = grid.points

    def integrand(x_p):
        G, dGn, _ = _kernel_parts(pmap, x_p, obs, need_normal=coef_double != 0.0)
        out = np.zeros_like(G)
        if coef_single != 0.0:
            out += coef_single * G * fields.bulk_source_weighted(x_p)[:, None]
        if coef_double != 0.0:
            out += coef_double * dGn * fields.pol_normal_weighted(x_p)[:, None]
        return out

    dom = pmap.domain
    return adaptive_rectangle(integrand, dom.lo, dom.hi, tol=tol, max_depth=max_depth)


def _boundary_integral(
    fields: MomentFields,
    pmap: ParametricMap,
    grid: ObservationGrid,
    coef: float,
    tol: float,
    max_depth: int,
) -> np.ndarray:
    """INT_dT G (sigma J0 + (J0 p_p).n) ds in parameter arc length."""
    obs = grid.points
    edges = pmap.domain.edges()
    total = np.zeros(grid.n_points)
    edge_tol = tol / (2 * len(edges))
    for edge in edges:
        n_param = np.asarray(edge.normal, float)

        def pn_integrand(s, edge=edge, n_param=n_param):
            x_p = edge.points(s)
            G, _, _ = _kernel_parts(pmap, x_p, obs, need_normal=False)
            pn = fields.pol_planar_weighted(x_p) @ n_param
            return G * pn[:, None]

        total += coef * adaptive_segment(
            pn_integrand, edge.s_range[0], edge.s_range[1], tol=edge_tol, max_depth=max_depth
        )

        segments = [seg for seg in fields.sigma_segments.get(edge.name, []) if seg.value != 0.0]
        if not segments:
            continue
        seg_tol = edge_tol / len(segments)
        for seg in segments:

            def sig_integrand(s, edge=edge):
                x_p = edge.points(s)
                G, _, fr = _kernel_parts(pmap, x_p, obs, need_normal=False)
                return G * np.asarray(fr.j0)[:, None]

            total += (
                coef
                * seg.value
                * adaptive_segment(sig_integrand, seg.s_lo, seg.s_hi, tol=seg_tol, max_depth=max_depth)
            )
    return total


def homogenized_potential_r1(
    fields: MomentFields,
    pmap: ParametricMap,
    grid: ObservationGrid,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> FieldSample:
    """Limit potential when the thickness shrinks faster than the lattice."""
    values = _bulk_integral(fields, pmap, grid, 1.0, 0.0, 0.5 * tol, max_depth)
    values = values + _boundary_integral(fields, pmap, grid, 1.0, 0.5 * tol, max_depth)
    return FieldSample(grid=grid, values=values, provenance="homogenized(R1)")


def homogenized_potential_r2(
    fields: MomentFields,
    alpha: float,
    pmap: ParametricMap,
    grid: ObservationGrid,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> FieldSample:
    """Limit potential at proportional thickness h = alpha * l."""
    values = _bulk_integral(fields, pmap, grid, alpha, alpha**2, 0.5 * tol, max_depth)
    values = values + _boundary_integral(fields, pmap, grid, alpha, 0.5 * tol, max_depth)
    return FieldSample(grid=grid, values=values, provenance=f"homogenized(R2 alpha={alpha:g})")


def homogenized_potential_r3(
    fields: MomentFields,
    pmap: ParametricMap,
    grid: ObservationGrid,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> FieldSample:
    """Limit potential when the lattice shrinks faster than the thickness.

    Single layer of the free charge plus the double layer of the normal
    polarization; no boundary term survives this limit.
    """

    obs = grid.points

    def integrand(x_p):
        G, dGn, _ = _kernel_parts(pmap, x_p, obs, need_normal=True)
        return G * fields.charge_weighted(x_p)[:, None] + dGn * fields.pol_normal_weighted(x_p)[:, None]

    dom = pmap.domain
    values = adaptive_rectangle(integrand, dom.lo, dom.hi, tol=tol, max_depth=max_depth)
    return FieldSample(grid=grid, values=values, provenance="homogenized(R3)")


def finite_t_double_layer(
    sigma_field: Callable[[np.ndarray], np.ndarray],
    pmap: ParametricMap,
    t: float,
    grid: ObservationGrid,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> FieldSample:
    """Two charged sheets a distance t apart, approaching the dipole limit.

    Phi_t(r) = (1/t) INT_T [G(r, psi0(x)) - G(r, psi0(x) - t nu(x))]
               * sigma(x) J0(x) dx

    The offset sheet reuses the mid-surface quadrature nodes and Jacobian
    (the O(t) Jacobian mismatch folds into the O(t) convergence).  Converges
    to the double-layer potential at first order in t.
    """
    if t <= 0.0:
        raise ValueError("sheet separation t must be positive")
    if grid.standoff < 10.0 * t:
        raise StandoffViolation(
            f"grid standoff {grid.standoff:.4g} < 10 * t = {10 * t:.4g}"
        )
    obs = grid.points

    def integrand(x_p):
        fr = surface_frame(pmap, x_p)
        sig = sigma_field(x_p) * np.asarray(fr.j0)
        diff0 = obs[None, :, :] - fr.point[:, None, :]
        d0 = np.sqrt(np.sum(diff0 * diff0, axis=-1))
        shifted = fr.point - t * fr.normal
        diff1 = obs[None, :, :] - shifted[:, None, :]
        d1 = np.sqrt(np.sum(diff1 * diff1, axis=-1))
        return (1.0 / d0 - 1.0 / d1) * (sig[:, None] / t)

    dom = pmap.domain
    values = adaptive_rectangle(integrand, dom.lo, dom.hi, tol=tol, max_depth=max_depth)
    return FieldSample(grid=grid, values=values, provenance=f"double-layer-finite-t(t={t:g})")


def field_to_csv(sample: FieldSample, fileobj, comment: Optional[str] = None) -> None:
    """Write (x, y, z, Phi, provenance) rows."""
    import csv

    if comment:
        fileobj.write(f"# {comment}\n")
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["x", "y", "z", "phi", "provenance"])
    for p, v in zip(sample.grid.points, sample.values):
        writer.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(v)), sample.provenance])
