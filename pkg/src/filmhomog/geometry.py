"""Film parameterization: maps, Jacobians, frames, surface divergence.

A film is described by a smooth map psi : T x R -> R^3 over a rectangular
parameter domain T in R^2.  The mid-surface is the image of x3 = 0.  All
homogenized sources are integrated in parameter space, so the quantities
needed downstream are:

    J(x)   = sqrt(det(Dpsi^T Dpsi))        volume Jacobian at a 3D parameter point
    J0(xp) = |d1 psi0 x d2 psi0|           surface Jacobian of the mid-surface
    nu     = unit normal of the mid-surface (oriented by the parameterization)
    n      = outward co-normal on the film edge (tangent to the surface,
             orthogonal to the boundary curve)

Maps carry either an analytic differential or fall back to central finite
differences with a step relative to the domain diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateFrame, NonPositiveJacobian

_JACOBIAN_FLOOR = 1e-14
_FRAME_TOL = 1e-12
_FD_STEP_REL = 1e-6  # central-difference step relative to domain diameter


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned parameter rectangle [lo1, hi1] x [lo2, hi2]."""

    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self):
        if not (self.hi[0] > self.lo[0] and self.hi[1] > self.lo[1]):
            raise ValueError(f"degenerate rectangle: lo={self.lo}, hi={self.hi}")

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi, float) - np.asarray(self.lo, float)

    @property
    def diameter(self) -> float:
        return float(np.hypot(*self.widths))

    @property
    def area(self) -> float:
        w = self.widths
        return float(w[0] * w[1])

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        p = np.asarray(points, float)
        lo = np.asarray(self.lo, float) - tol
        hi = np.asarray(self.hi, float) + tol
        return np.all((p >= lo) & (p <= hi), axis=-1)

    def corners(self) -> np.ndarray:
        (a, b), (c, d) = self.lo, self.hi
        return np.array([[a, b], [c, b], [c, d], [a, d]], float)

    def edges(self) -> list["Edge"]:
        (a, b), (c, d) = self.lo, self.hi
        return [
            Edge("left", 0, a, (b, d), (-1.0, 0.0)),
            Edge("right", 0, c, (b, d), (1.0, 0.0)),
            Edge("bottom", 1, b, (a, c), (0.0, -1.0)),
            Edge("top", 1, d, (a, c), (0.0, 1.0)),
        ]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, 2))


@dataclass(frozen=True)
class Edge:
    """One side of the parameter rectangle.

    The edge is the set {x : x[axis] = value, s_range[0] <= x[1-axis] <= s_range[1]};
    ``normal`` is the outward unit normal of the rectangle in parameter space.
    """

    name: str
    axis: int  # coordinate held fixed (0 -> vertical edge, 1 -> horizontal)
    value: float
    s_range: tuple[float, float]
    normal: tuple[float, float]

    @property
    def length(self) -> float:
        return self.s_range[1] - self.s_range[0]

    def points(self, s: np.ndarray) -> np.ndarray:
        """Parameter-space points at arc coordinates ``s`` along the edge."""
        s = np.asarray(s, float)
        out = np.empty(s.shape + (2,))
        out[..., self.axis] = self.value
        out[..., 1 - self.axis] = s
        return out


@dataclass(frozen=True)
class SurfaceFrame:
    """Mid-surface frame at one or many parameter points."""

    point_param: np.ndarray  # (..., 2)
    point: np.ndarray        # (..., 3) physical position on the mid-surface
    tangent1: np.ndarray     # (..., 3) d psi0 / d x1
    tangent2: np.ndarray     # (..., 3) d psi0 / d x2
    normal: np.ndarray       # (..., 3) unit normal
    j0: np.ndarray           # (...,)  surface Jacobian


@dataclass(frozen=True)
class BoundaryFrame:
    """Edge frame: physical boundary point, outward co-normal, line Jacobian."""

    point: np.ndarray          # (..., 3)
    conormal: np.ndarray       # (..., 3) unit, tangent to the surface, outward
    line_jacobian: np.ndarray  # (...,)  |d psi0 / ds| along the boundary curve
    normal: np.ndarray         # (..., 3) surface normal at the same points


class ParametricMap:
    """Smooth parameterization of the film with its differential.

    Use the factory constructors (:meth:`identity`, :meth:`cylinder`,
    :meth:`polar_disk`, :meth:`scaled`, :meth:`custom`).  Instances are
    immutable and safe to share across workers.
    """

    def __init__(
        self,
        domain: Rectangle,
        mapping: Callable[[np.ndarray], np.ndarray],
        differential: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        kind: str = "custom",
        h_max: float = math.inf,
        fd_step: Optional[float] = None,
    ):
        self.domain = domain
        self.kind = kind
        self.h_max = float(h_max)
        self._map = mapping
        self._diff = differential
        self._fd_step = fd_step if fd_step is not None else _FD_STEP_REL * domain.diameter

    # ---------------- factories ----------------

    @classmethod
    def identity(cls, domain: Rectangle) -> "ParametricMap":
        """Flat film: psi = id, mid-surface is T x {0}."""
        eye = np.eye(3)

        def mapping(x):
            return np.array(x, float, copy=True)

        def differential(x):
            x = np.asarray(x, float)
            return np.broadcast_to(eye, x.shape[:-1] + (3, 3)).copy()

        return cls(domain, mapping, differential, kind="identity")

    @classmethod
    def cylinder(cls, domain: Rectangle, radius: float, h_max: Optional[float] = None) -> "ParametricMap":
        """Isometric wrap onto a cylinder of the given radius.

        psi(x) = ((R + x3) cos(x1/R), (R + x3) sin(x1/R), x2); the mid-surface
        Jacobian is exactly 1 (bending without stretch).
        """
        R = float(radius)
        if R <= 0:
            raise ValueError("cylinder radius must be positive")

        def mapping(x):
            x = np.asarray(x, float)
            ang = x[..., 0] / R
            r = R + x[..., 2]
            return np.stack([r * np.cos(ang), r * np.sin(ang), x[..., 1]], axis=-1)

        def differential(x):
            x = np.asarray(x, float)
            ang = x[..., 0] / R
            c, s = np.cos(ang), np.sin(ang)
            r = R + x[..., 2]
            D = np.zeros(x.shape[:-1] + (3, 3))
            D[..., 0, 0] = -r / R * s
            D[..., 1, 0] = r / R * c
            D[..., 2, 1] = 1.0
            D[..., 0, 2] = c
            D[..., 1, 2] = s
            return D

        hm = 0.5 * R if h_max is None else float(h_max)
        return cls(domain, mapping, differential, kind="cylinder", h_max=hm)

    @classmethod
    def polar_disk(cls, radius: float = 1.0) -> "ParametricMap":
        """Flat disk of the given radius, parameterized in polar coordinates.

        T = [0, radius] x [0, 2 pi]; J0 = x1 degenerates on the x1 = 0 edge
        only, which carries zero measure and is never hit by Gauss nodes.
        """
        R = float(radius)
        domain = Rectangle((0.0, 0.0), (R, 2.0 * math.pi))

        def mapping(x):
            x = np.asarray(x, float)
            return np.stack(
                [x[..., 0] * np.cos(x[..., 1]), x[..., 0] * np.sin(x[..., 1]), x[..., 2]],
                axis=-1,
            )

        def differential(x):
            x = np.asarray(x, float)
            c, s = np.cos(x[..., 1]), np.sin(x[..., 1])
            D = np.zeros(x.shape[:-1] + (3, 3))
            D[..., 0, 0] = c
            D[..., 1, 0] = s
            D[..., 0, 1] = -x[..., 0] * s
            D[..., 1, 1] = x[..., 0] * c
            D[..., 2, 2] = 1.0
            return D

        return cls(domain, mapping, differential, kind="disk")

    @classmethod
    def scaled(cls, domain: Rectangle, factors: Sequence[float]) -> "ParametricMap":
        """Diagonal stretch psi(x) = (a1 x1, a2 x2, a3 x3)."""
        a = np.asarray(factors, float)
        if a.shape != (3,):
            raise ValueError("scaled map needs exactly three factors")
        D0 = np.diag(a)

        def mapping(x):
            return np.asarray(x, float) * a

        def differential(x):
            x = np.asarray(x, float)
            return np.broadcast_to(D0, x.shape[:-1] + (3, 3)).copy()

        return cls(domain, mapping, differential, kind="scaled")

    @classmethod
    def custom(
        cls,
        domain: Rectangle,
        mapping: Callable[[np.ndarray], np.ndarray],
        differential: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        h_max: float = math.inf,
    ) -> "ParametricMap":
        """Analytic evaluator with an analytic or finite-difference differential."""
        return cls(domain, mapping, differential, kind="custom", h_max=h_max)

    # ---------------- evaluation ----------------

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """psi at 3D parameter points (..., 3)."""
        return self._map(np.asarray(x, float))

    def midsurface(self, x_p: np.ndarray) -> np.ndarray:
        """psi0 at planar parameter points (..., 2)."""
        return self.evaluate(self._embed(x_p))

    def differential(self, x: np.ndarray) -> np.ndarray:
        """D psi as (..., 3, 3); analytic if available, else central differences."""
        x = np.asarray(x, float)
        if self._diff is not None:
            return self._diff(x)
        step = self._fd_step
        D = np.empty(x.shape[:-1] + (3, 3))
        for j in range(3):
            dx = np.zeros(3)
            dx[j] = step
            D[..., :, j] = (self._map(x + dx) - self._map(x - dx)) / (2.0 * step)
        return D

    @staticmethod
    def _embed(x_p: np.ndarray) -> np.ndarray:
        x_p = np.asarray(x_p, float)
        out = np.zeros(x_p.shape[:-1] + (3,))
        out[..., :2] = x_p
        return out

    # ---------------- sampled validity checks ----------------

    def check_valid(self, n_samples: int = 200, seed: int = 0) -> None:
        """Sampled injectivity on T x (-h_max, h_max) and J0 > 0 on T.

        Raises NonPositiveJacobian / ValueError on failure.  Probabilistic by
        design: measure-zero degeneracies (polar axis, angular seam) pass.
        """
        rng = np.random.default_rng(seed)
        x_p = self.domain.sample(n_samples, rng)
        D = self.differential(self._embed(x_p))
        D0 = D[..., :, :2]
        gram_det = np.linalg.det(np.einsum("...ki,...kj->...ij", D0, D0))
        if np.any(gram_det <= _JACOBIAN_FLOOR**2):
            raise NonPositiveJacobian(
                f"sampled surface Jacobian not positive (min det(G0) = {gram_det.min():.3e})"
            )
        hm = self.h_max if math.isfinite(self.h_max) else 0.5
        x3 = rng.uniform(-hm, hm, size=(n_samples, 1))
        pts = np.concatenate([self.domain.sample(n_samples, rng), x3], axis=1)
        img = self.evaluate(pts)
        d2 = np.sum((img[:, None, :] - img[None, :, :]) ** 2, axis=-1)
        iu = np.triu_indices(n_samples, k=1)
        if np.any(d2[iu] < 1e-24):
            raise ValueError("map is not injective on the sampled validity region")


def jacobian_full(pmap: ParametricMap, x: np.ndarray) -> np.ndarray:
    """Volume Jacobian sqrt(det(Dpsi^T Dpsi)) at 3D parameter points.

    Scalar in, scalar out; batches of shape (..., 3) are supported.
    Raises NonPositiveJacobian if any value falls to <= 1e-14.
    """
    x = np.asarray(x, float)
    D = pmap.differential(x)
    G = np.einsum("...ki,...kj->...ij", D, D)
    det = np.linalg.det(G)
    if np.any(det <= _JACOBIAN_FLOOR**2):
        raise NonPositiveJacobian(
            f"Jacobian not positive at parameter point(s); min det(G) = {det.min():.3e}"
        )
    out = np.sqrt(det)
    return out if out.ndim else float(out)


def surface_frame(pmap: ParametricMap, x_p: np.ndarray) -> SurfaceFrame:
    """Tangents, unit normal and surface Jacobian of the mid-surface at x_p.

    J0 = |t1 x t2| equals sqrt(det(Dpsi0^T Dpsi0)) by the Gram identity.
    """
    x_p = np.asarray(x_p, float)
    x = ParametricMap._embed(x_p)
    D = pmap.differential(x)
    t1 = D[..., :, 0]
    t2 = D[..., :, 1]
    cross = np.cross(t1, t2)
    j0 = np.linalg.norm(cross, axis=-1)
    scale = np.linalg.norm(t1, axis=-1) * np.linalg.norm(t2, axis=-1)
    if np.any(j0 <= _FRAME_TOL * np.maximum(scale, 1.0)):
        raise DegenerateFrame("surface tangents are parallel within tolerance")
    normal = cross / j0[..., None]
    return SurfaceFrame(
        point_param=x_p,
        point=pmap.evaluate(x),
        tangent1=t1,
        tangent2=t2,
        normal=normal,
        j0=j0 if j0.ndim else float(j0),
    )


def boundary_frame(pmap: ParametricMap, edge: Edge, s: np.ndarray) -> BoundaryFrame:
    """Outward co-normal and line Jacobian along one film edge.

    ``s`` is the free parameter coordinate along the rectangle edge.  The
    co-normal is the unit tangent vector of the surface orthogonal to the
    boundary curve, pointing out of the film; the line Jacobian converts
    parameter arc length to physical arc length.
    """
    s = np.asarray(s, float)
    x_p = edge.points(s)
    fr = surface_frame(pmap, x_p)
    tangents = (fr.tangent1, fr.tangent2)
    tau = tangents[1 - edge.axis]          # along the boundary curve
    outward = tangents[edge.axis]          # crosses the boundary
    sign = edge.normal[edge.axis]
    line_jac = np.linalg.norm(tau, axis=-1)
    tau_hat = tau / line_jac[..., None]
    n = sign * (outward - np.sum(outward * tau_hat, axis=-1)[..., None] * tau_hat)
    n_norm = np.linalg.norm(n, axis=-1)
    if np.any(n_norm <= _FRAME_TOL):
        raise DegenerateFrame("boundary co-normal degenerate (tangents parallel)")
    return BoundaryFrame(
        point=fr.point,
        conormal=n / n_norm[..., None],
        line_jacobian=line_jac if line_jac.ndim else float(line_jac),
        normal=fr.normal,
    )


def surface_divergence_term(
    pmap: ParametricMap,
    p_field: Callable[[np.ndarray], np.ndarray],
    x_p: np.ndarray,
    div_j0p: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    step: Optional[float] = None,
) -> np.ndarray:
    """Surface-divergence source div_p(J0 * p) / J0 at planar points.

    ``p_field`` maps (..., 2) parameter points to planar vectors (..., 2) in
    parameter components.  When ``div_j0p`` is supplied it is used directly;
    otherwise the product J0*p is differenced centrally with a step of
    1e-5 * diam(T) (overridable).
    """
    x_p = np.asarray(x_p, float)
    j0 = np.asarray(surface_frame(pmap, x_p).j0)
    if div_j0p is not None:
        out = np.asarray(div_j0p(x_p)) / j0
        return out if out.ndim else float(out)

    hstep = step if step is not None else 1e-5 * pmap.domain.diameter

    def weighted(x):
        return np.asarray(p_field(x)) * np.asarray(surface_frame(pmap, x).j0)[..., None]

    div = np.zeros(x_p.shape[:-1])
    for axis in range(2):
        dx = np.zeros(2)
        dx[axis] = hstep
        div = div + (weighted(x_p + dx)[..., axis] - weighted(x_p - dx)[..., axis]) / (2.0 * hstep)
    out = div / j0
    return out if out.ndim else float(out)
