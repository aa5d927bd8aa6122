"""Microscopic charge families: per-cell motifs with regime-dependent scaling.

A motif is a list of weighted reference points (w, y, z) with y in the unit
cell (basis coordinates, half-open [0,1)^2) and z in (-1, 1).  Weights are
atoms of the reference measure *including* the volume Jacobian, so every
per-cell moment downstream is an exact finite sum and the direct potential
is an exact Green's sum.  Weights may be modulated by a smooth function of
the cell corner drawn from a fixed catalog (constant / linear / sinusoid).

Charge imbalance ("free charge") is modeled as a separate list of points
whose weights enter scaled by l^alpha * h^beta, so the per-cell net charge
normalized by that factor has a finite limit.

Scaling regimes tie the density normalization to (l, h):

    R1  thickness shrinks faster than the lattice (h/l -> 0), density ~ 1/(l h)
    R2  proportional thickness h = alpha l,                   density ~ 1/l^2
    R3  lattice shrinks faster than the thickness (l/h -> 0), density ~ 1/h^2

Combining each with the per-cell volume factor l^2 h of the corner-map
substitution gives the physical per-atom prefactors l, alpha*l and l^2/h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import RegimeMismatch, UnsupportedModulation
from .geometry import ParametricMap
from .lattice import Tessellation


# ---------------------------------------------------------------------------
# weight modulation catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Modulation:
    """Smooth scalar factor on a motif weight, evaluated at cell corners.

    kind = "constant":  value
    kind = "linear":    value + coef . x
    kind = "sinusoid":  value * sin(coef . x + phase)

    The catalog is closed under translation (see :meth:`shifted`), which is
    what makes exact re-binning between unit-cell choices possible.
    """

    kind: str = "constant"
    value: float = 1.0
    coef: tuple[float, float] = (0.0, 0.0)
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "sinusoid"):
            raise UnsupportedModulation(f"unknown modulation kind {self.kind!r}")

    def __call__(self, x_p: np.ndarray) -> np.ndarray:
        x_p = np.asarray(x_p, float)
        if self.kind == "constant":
            return np.broadcast_to(np.float64(self.value), x_p.shape[:-1]).copy()
        dot = x_p @ np.asarray(self.coef, float)
        if self.kind == "linear":
            return self.value + dot
        return self.value * np.sin(dot + self.phase)

    def gradient(self, x_p: np.ndarray) -> np.ndarray:
        x_p = np.asarray(x_p, float)
        coef = np.asarray(self.coef, float)
        if self.kind == "constant":
            return np.zeros(x_p.shape[:-1] + (2,))
        if self.kind == "linear":
            return np.broadcast_to(coef, x_p.shape[:-1] + (2,)).copy()
        dot = x_p @ coef
        return self.value * np.cos(dot + self.phase)[..., None] * coef

    def shifted(self, delta: np.ndarray) -> "Modulation":
        """Same modulation re-anchored: shifted(d)(x) == self(x + d)."""
        delta = np.asarray(delta, float)
        if self.kind == "constant":
            return self
        if self.kind == "linear":
            off = float(np.dot(self.coef, delta))
            return replace(self, value=self.value + off)
        off = float(np.dot(self.coef, delta))
        return replace(self, phase=self.phase + off)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or (
            self.coef[0] == 0.0 and self.coef[1] == 0.0 and self.kind == "linear"
        )


# ---------------------------------------------------------------------------
# motifs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MotifPoint:
    """One weighted reference point of the cell motif."""

    w: float
    y: tuple[float, float]          # basis coordinates in the unit cell
    z: float                        # normalized thickness coordinate in (-1, 1)
    modulation: Modulation = Modulation()

    def weight_at(self, corner: np.ndarray) -> np.ndarray:
        return self.w * self.modulation(corner)


@dataclass(frozen=True)
class Motif:
    """Per-cell reference charge: neutral points plus an optional imbalance.

    ``points`` carry the charge-neutral part; ``free_points`` carry the
    imbalance whose weights are multiplied by l^alpha * h^beta at realization
    so the normalized per-cell net charge has a finite limit.
    """

    points: tuple[MotifPoint, ...]
    free_points: tuple[MotifPoint, ...] = ()
    free_charge_order: tuple[int, int] = (1, 0)

    def __post_init__(self):
        if not self.points and not self.free_points:
            raise ValueError("motif has no points")

    def validate_interior(self, strict: bool = True) -> None:
        """Check every point lies in the (strictly interior) reference cell."""
        lo, hi = (0.0, 1.0)
        for pt in self.points + self.free_points:
            inside = (
                (lo < pt.y[0] < hi and lo < pt.y[1] < hi)
                if strict
                else (lo <= pt.y[0] < hi and lo <= pt.y[1] < hi)
            )
            if not inside or not (-1.0 < pt.z < 1.0):
                raise ValueError(f"motif point outside reference cell: {pt}")

    def is_neutral(self, corners: np.ndarray, tol: float = 1e-12) -> bool:
        """Neutral part sums to zero at every sampled corner."""
        total = np.zeros(np.asarray(corners).shape[:-1])
        for pt in self.points:
            total = total + pt.weight_at(corners)
        return bool(np.all(np.abs(total) <= tol))

    def imbalance_factor(self, l: float, h: float) -> float:
        a, b = self.free_charge_order
        return l**a * h**b


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regime:
    """Asymptotic regime tying thickness to lattice scale."""

    kind: str  # "R1" | "R2" | "R3"
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("R1", "R2", "R3"):
            raise ValueError(f"unknown regime {self.kind!r}")
        if self.kind == "R2" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("regime R2 requires a positive alpha")

    def check_pair(self, l: float, h: float) -> None:
        if self.kind == "R2" and abs(h - self.alpha * l) > 1e-12 * max(h, self.alpha * l):
            raise RegimeMismatch(
                f"regime R2 requires h = alpha*l exactly; got h={h}, alpha*l={self.alpha * l}"
            )

    def prefactor(self, l: float, h: float) -> float:
        """Physical per-atom charge factor: cell volume l^2 h times the density scaling."""
        self.check_pair(l, h)
        if self.kind == "R1":
            return l
        if self.kind == "R2":
            return self.alpha * l
        return l * l / h

    def label(self) -> str:
        if self.kind == "R2":
            return f"R2(alpha={self.alpha:g})"
        return self.kind


# ---------------------------------------------------------------------------
# realized distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledChargeDistribution:
    """All physical point charges of one (l, h) member of the family.

    Arrays are ordered cell-major (cells sorted by lattice index, motif
    points in declaration order) so enumeration is deterministic.
    """

    motif: Motif
    tessellation: Tessellation
    pmap: ParametricMap
    l: float
    h: float
    regime: Regime
    positions: np.ndarray        # (N, 3) physical positions
    magnitudes: np.ndarray       # (N,)   physical charges
    ref_weights: np.ndarray      # (N,)   unscaled reference weights (incl. imbalance factor)
    planar_params: np.ndarray    # (N, 2) planar parameter positions
    z_params: np.ndarray         # (N,)   normalized thickness coordinates

    @property
    def n_charges(self) -> int:
        return len(self.magnitudes)


def realize(
    motif: Motif,
    tessellation: Tessellation,
    pmap: ParametricMap,
    l: float,
    h: float,
    regime: Regime,
) -> ScaledChargeDistribution:
    """Enumerate every physical point charge of the scaled distribution.

    Full cells contribute every motif point; partial cells keep only points
    whose planar parameter position lies in the (closed) domain.  Magnitudes
    are prefactor(regime) * modulated weight at the cell corner, with
    imbalance points additionally scaled by l^alpha * h^beta.  Enumeration
    order is fixed (motif entry major, cells by ascending index, full cells
    first) so outputs are deterministic.
    """
    if h > pmap.h_max:
        raise ValueError(f"half-thickness h={h} exceeds the map's h_max={pmap.h_max}")
    if abs(l - tessellation.l) > 1e-15:
        raise ValueError("tessellation was built for a different scale l")
    pref = regime.prefactor(l, h)
    eps = motif.imbalance_factor(l, h)
    B = tessellation.choice.basis
    domain = tessellation.domain
    keep_tol = 1e-12 * max(1.0, domain.diameter)
    entries = [(pt, 1.0) for pt in motif.points] + [(pt, eps) for pt in motif.free_points]

    planar_chunks, ref_chunks, z_chunks = [], [], []

    full_corners = np.asarray([c.corner for c in tessellation.full_cells], float).reshape(-1, 2)
    for pt, scale in entries:
        if len(full_corners):
            planar = full_corners + l * (B @ np.asarray(pt.y, float))
            planar_chunks.append(planar)
            ref_chunks.append(scale * pt.w * pt.modulation(full_corners))
            z_chunks.append(np.full(len(planar), pt.z))
        for cell in tessellation.partial_cells:
            p = cell.corner + l * (B @ np.asarray(pt.y, float))
            if bool(domain.contains(p, tol=keep_tol)):
                planar_chunks.append(p.reshape(1, 2))
                ref_chunks.append(np.array([scale * float(pt.weight_at(cell.corner))]))
                z_chunks.append(np.array([pt.z]))

    if planar_chunks:
        planar_params = np.concatenate(planar_chunks, axis=0)
        ref_weights = np.concatenate(ref_chunks)
        z_params = np.concatenate(z_chunks)
        params = np.concatenate([planar_params, h * z_params[:, None]], axis=1)
        positions = pmap.evaluate(params)
    else:
        planar_params = np.zeros((0, 2))
        ref_weights = np.zeros(0)
        z_params = np.zeros(0)
        positions = np.zeros((0, 3))
    return ScaledChargeDistribution(
        motif=motif,
        tessellation=tessellation,
        pmap=pmap,
        l=l,
        h=h,
        regime=regime,
        positions=positions,
        magnitudes=pref * ref_weights,
        ref_weights=ref_weights,
        planar_params=planar_params,
        z_params=z_params,
    )


def total_charge(dist: ScaledChargeDistribution) -> float:
    """Exactly-rounded sum of all physical charges (global neutrality check)."""
    return math.fsum(dist.magnitudes.tolist())
