"""The channel-coupling potential matrix and its diagnostics.

The isotropic part is a single repulsive c12/r^12 wall plus the dispersion
tail -C6/r^6 - C8/r^8 - C10/r^10, the tail switched on smoothly by the same
matching function the dipole term uses. The induced dipole term is
-C_E f_c(r; r_c) P2(cos theta) / r^3 with its angular part supplied by
:mod:`dipscat.channels`.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .channels import p2_coupling_matrix, p2_matrix_element

C22 = p2_matrix_element(2, 0, 2, 0)  # 2/7
C20 = p2_matrix_element(0, 0, 2, 0)  # 1/sqrt(5)


def matching_function(r, r_c):
    """Smooth cut-off f_c: 1 for r >= r_c, exp(-(r_c/r - 1)^2) inside."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("matching_function requires r > 0")
    out = np.ones_like(r)
    inside = r < r_c
    out[inside] = np.exp(-((r_c / r[inside] - 1.0) ** 2))
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ShortRangeModel:
    """Repulsive-wall short-range model, one tunable coefficient."""

    c12: float
    r_join: float = 32.0
    form: str = "c12-wall"

    def __post_init__(self):
        if self.c12 <= 0:
            raise ValueError("c12 must be positive")
        if self.r_join <= 0:
            raise ValueError("r_join must be positive")


@dataclass(frozen=True)
class CutoffSpec:
    """Cut-off radius for the dipole term (paper-style default 27 a0)."""

    r_c: float = 27.0

    def __post_init__(self):
        if self.r_c < 5.0:
            raise ValueError("r_c must be at least 5 a0")


class PotentialMatrixEvaluator:
    """Evaluates the full real-symmetric coupling matrix on a channel basis.

    Immutable after construction; `matrix` and friends are pure functions of
    r. Selection-rule zeros are exact (never touched), and the i^(l'-l)
    phase of the coupled equations is folded into the cached angular
    structure as (-1)^(dl/2).
    """

    def __init__(self, params, field, basis, short_range, cutoff=CutoffSpec()):
        self.params = params
        self.field = field
        self.basis = basis
        self.short_range = short_range
        self.cutoff = cutoff
        self._coupling = p2_coupling_matrix(basis)
        ls = np.array(basis.l_values, dtype=float)
        self._cent = ls * (ls + 1.0) / (2.0 * params.mu)
        self._diag_idx = np.arange(basis.n)

    # -- scalar pieces -------------------------------------------------

    def isotropic(self, r):
        """Field-free potential V(r): wall plus smoothly joined tail."""
        r = np.asarray(r, dtype=float)
        p = self.params
        tail = -(p.c6 / r**6 + p.c8 / r**8 + p.c10 / r**10)
        v = self.short_range.c12 / r**12 + matching_function(r, self.short_range.r_join) * tail
        if v.ndim == 0:
            return float(v)
        return v

    def dipole_radial(self, r):
        """Radial factor -C_E f_c(r)/r^3 of the dipole term (no angular part)."""
        r = np.asarray(r, dtype=float)
        if self.field.c_e == 0.0:
            out = np.zeros_like(r)
        else:
            out = -self.field.c_e * matching_function(r, self.cutoff.r_c) / r**3
        if out.ndim == 0:
            return float(out)
        return out

    # -- matrices ------------------------------------------------------

    def matrix(self, r):
        """Full n x n potential matrix (energy units) at radius r."""
        m = self.dipole_radial(r) * self._coupling
        m[self._diag_idx, self._diag_idx] += self.isotropic(r) + self._cent / r**2
        return m

    def diagonal_profile(self, r):
        """Vectorized diagonal entries over an array of radii, shape (nr, n)."""
        r = np.asarray(r, dtype=float)
        iso = self.isotropic(r)
        dip = self.dipole_radial(r)
        diag_coup = np.diag(self._coupling)
        return (
            iso[:, None]
            + self._cent[None, :] / r[:, None] ** 2
            + dip[:, None] * diag_coup[None, :]
        )

    def effective_diagonal(self, l, r):
        """V_l(r): isotropic + centrifugal + diagonal dipole for channel l."""
        m = self.basis.m
        cent = l * (l + 1.0) / (2.0 * self.params.mu * r * r)
        return self.isotropic(r) + cent + self.dipole_radial(r) * p2_matrix_element(l, m, l, m)

    def anisotropy(self, r):
        """eta(r) = |V12 / (V2 - V0)| for a two-channel evaluator."""
        if self.basis.n != 2:
            raise ValueError("anisotropy is defined for a two-channel basis")
        mat = self.matrix(r)
        denom = mat[1, 1] - mat[0, 0]
        if denom == 0.0:
            return math.inf
        return abs(mat[0, 1] / denom)


def barrier(l2_coupling, c_e, mu):
    """Barrier position and height of the asymptotic l=2 effective potential.

    V2 ~ 6/(2 mu r^2) - c_e*C22/r^3 peaks at r_m = mu*c_e*C22/2 with height
    delta_v = 1/(mu r_m^2). Zero field carries no barrier.
    """
    if c_e <= 0.0:
        raise ValueError("barrier requires c_e > 0 (no barrier at zero field)")
    r_m = mu * c_e * l2_coupling / 2.0
    delta_v = 1.0 / (mu * r_m * r_m)
    return r_m, delta_v


class TuningError(RuntimeError):
    """Raised when no c12 bracket reaches the target scattering length."""

    def __init__(self, message, sweep):
        super().__init__(message)
        self.sweep = sweep


def tune_short_range(
    params,
    target_a_sc=None,
    r_join=32.0,
    cutoff=CutoffSpec(),
    c12_lo=None,
    c12_hi=None,
    n_scan=60,
    rel_tol=1e-3,
    max_iter=200,
):
    """Find c12 such that the zero-field s-wave scattering length hits target.

    a_sc(c12) has poles wherever a bound state crosses threshold, so the scan
    locates a pole-free bracket first and bisection refines inside it.
    Raises :class:`TuningError` carrying the scanned (c12, a_sc) pairs when no
    bracket exists in the window.
    """
    from .propagator import scattering_length
    from .system import FieldSpec
    from .channels import build_basis

    if target_a_sc is None:
        target_a_sc = params.target_a_sc
    basis = build_basis("even", 0, 0)
    field = FieldSpec.zero()

    # Shallow-well branch: wall between ~8 and ~14 a0 keeps the inner WKB
    # phase (and propagation cost) small while still supporting bound states.
    if c12_lo is None:
        c12_lo = params.c6 * 8.0**6
    if c12_hi is None:
        c12_hi = params.c6 * 14.0**6

    def a_of(c12):
        ev = PotentialMatrixEvaluator(
            params, field, basis, ShortRangeModel(c12=c12, r_join=r_join), cutoff
        )
        return scattering_length(ev)

    grid = np.geomspace(c12_lo, c12_hi, n_scan)
    sweep = [(c, a_of(c)) for c in grid]

    scale = max(abs(target_a_sc), 1.0)
    bracket = None
    for (c1, a1), (c2, a2) in zip(sweep, sweep[1:]):
        f1, f2 = a1 - target_a_sc, a2 - target_a_sc
        if f1 == 0.0:
            bracket = (c1, c1)
            break
        # Reject pole-straddling intervals: a_sc jumps through infinity there,
        # which also flips the sign of (a - target) without a true crossing.
        if f1 * f2 < 0.0 and abs(a1) < 50.0 * scale and abs(a2) < 50.0 * scale:
            bracket = (c1, c2)
            break
    if bracket is None:
        raise TuningError(
            f"no c12 bracket for a_sc={target_a_sc} in [{c12_lo:g}, {c12_hi:g}]",
            sweep,
        )

    lo, hi = bracket
    f_lo = a_of(lo) - target_a_sc
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = a_of(mid) - target_a_sc
        if abs(f_mid) <= rel_tol * scale:
            return ShortRangeModel(c12=mid, r_join=r_join)
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    mid = 0.5 * (lo + hi)
    achieved = a_of(mid)
    if abs(achieved - target_a_sc) <= rel_tol * scale:
        return ShortRangeModel(c12=mid, r_join=r_join)
    raise TuningError(
        f"bisection failed to reach a_sc={target_a_sc} (got {achieved})", sweep
    )


def with_field(ev, field):
    """A copy of an evaluator at a different dc field (same everything else)."""
    return PotentialMatrixEvaluator(
        ev.params, field, ev.basis, ev.short_range, ev.cutoff
    )
