"""Quantum-defect layer: short-range matching, K0, physical K/S/T.

The coupled solution matrix is integrated only to a matching radius R0,
where each channel is projected onto its analytic tail pair (n = 6 for
l = 0, n = 3 with C3 = C_E <lm|P2|lm> for l >= 1) through Wronskians:

    I = (pi/2) W(Phi, G),   J = -(pi/2) W(Phi, F),   W(u, v) = u'v - uv'.

K0 = sym(J I^-1) is the frame-invariant short-range reaction matrix. The
physical K comes from the asymptotic amplitudes c1 = Z_FB I + Z_GB J,
c2 = Z_FC I + Z_GC J (diagonal Z per channel), reusing the direct
pipeline's K/S/T assembly, so both pipelines share one set of matrix
conventions. Off-diagonal couplings beyond R0 are neglected, which is the
operative approximation of the whole method.
"""

import math
import time
from dataclasses import dataclass, field as _field

import numpy as np

from .basepair import get_pair
from .channels import build_basis, p2_matrix_element
from .potential import PotentialMatrixEvaluator, with_field
from .propagator import (
    PropagationError,
    RadialGrid,
    cross_section,
    k_s_t_from_coefficients,
    propagate,
)


class MqdtError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChannelTail:
    """Tail assignment of one channel: -c_n / r^n beyond the matching radius."""

    l: int
    n: int
    c_n: float


@dataclass
class MatchContext:
    i_matrix: np.ndarray
    j_matrix: np.ndarray
    r0: float
    pair_values: list
    tails: list


@dataclass
class ShortRangeK:
    """Short-range reaction matrix with plateau/consistency metadata."""

    k0: np.ndarray
    r0: float
    energy: object
    field: object
    stability: float
    asymmetry: float
    meta: dict = _field(default_factory=dict)


def channel_tails(ev):
    """Per-channel (n, c_n): l = 0 keeps the dispersion tail, l >= 1 the
    field-induced diagonal -C_E <lm|P2|lm>/r^3. At zero field every channel
    falls back to the dispersion tail (all couplings vanish)."""
    tails = []
    for ch in ev.basis.channels:
        if ch.l == 0 or ev.field.c_e == 0.0:
            tails.append(ChannelTail(l=ch.l, n=6, c_n=ev.params.c6))
        else:
            coef = ev.field.c_e * p2_matrix_element(ch.l, ch.m, ch.l, ch.m)
            if coef <= 0.0:
                raise MqdtError(
                    f"channel (l={ch.l}, m={ch.m}) has non-attractive -1/r^3 "
                    "diagonal; outside the analytic-tail envelope"
                )
            tails.append(ChannelTail(l=ch.l, n=3, c_n=coef))
    return tails


def s_channel_defect(matrices, z0):
    """Effective s-channel quantum defect implied by the physical K.

    Inverts the single-channel relation K = (z_fc + k z_gc)/(z_fb + k z_gb)
    for the l = 0 channel. This is the conditioning-robust scalar whose
    zero-crossings mark new zero-energy bound states (the coupled-channel
    content enters through the physical K, which is exactly how the
    decoupled s-wave condition is meant to be used).
    """
    kp = float(np.real(matrices.k_matrix[0, 0]))
    den = kp * z0.z_gb - z0.z_gc
    if den == 0.0:
        return math.inf
    return (z0.z_fc - kp * z0.z_fb) / den


def match_at_r0(capture, tails, energy, mu, dps=None):
    """I, J coefficient matrices from Wronskians of Phi with the tail pairs."""
    n = capture.phi.shape[0]
    fv = np.empty(n)
    gv = np.empty(n)
    dfv = np.empty(n)
    dgv = np.empty(n)
    pairs = []
    for i, tail in enumerate(tails):
        kw = {"dps": dps} if dps else {}
        pair = get_pair(tail.n, tail.l, energy.e_au, tail.c_n, mu, **kw)
        v = pair.evaluate(capture.r)
        fv[i], gv[i], dfv[i], dgv[i] = v.f, v.g, v.df, v.dg
        pairs.append(v)
    half_pi = math.pi / 2.0
    i_mat = half_pi * (capture.dphi * gv[:, None] - capture.phi * dgv[:, None])
    j_mat = -half_pi * (capture.dphi * fv[:, None] - capture.phi * dfv[:, None])
    return MatchContext(
        i_matrix=i_mat, j_matrix=j_mat, r0=capture.r, pair_values=pairs, tails=tails
    )


def short_range_k(contexts, energy=None, field=None):
    """K0 = sym(J I^-1) from the first context; drift over the others.

    The stability metric is the paper's plateau criterion: K0 re-matched at
    radii up to 1.5 R0 must agree once the anisotropy is negligible.
    """
    def k0_of(ctx):
        try:
            return np.linalg.solve(ctx.i_matrix.T, ctx.j_matrix.T).T
        except np.linalg.LinAlgError as exc:
            raise MqdtError(f"ill-conditioned matching (I singular): {exc}") from exc

    base = k0_of(contexts[0])
    scale = max(float(np.max(np.abs(base))), 1.0)
    drift = 0.0
    for ctx in contexts[1:]:
        drift = max(drift, float(np.max(np.abs(k0_of(ctx) - base))) / scale)
    asym = float(np.max(np.abs(base - base.T)))
    return ShortRangeK(
        k0=0.5 * (base + base.T),
        r0=contexts[0].r0,
        energy=energy,
        field=field,
        stability=drift,
        asymmetry=asym,
        meta={"scan_radii": [c.r0 for c in contexts], "raw_drift": drift},
    )


def dispersion_tail_radius(ev, rel=1e-10):
    """Zero-field fallback for R0: wall contribution below `rel` of the tail."""
    return (ev.short_range.c12 / (rel * ev.params.c6)) ** (1.0 / 6.0) + ev.short_range.r_join


def choose_r0(
    ev,
    energy,
    eta_tol=5e-3,
    scale_mult=10.0,
    plateau_tol=1e-3,
    r_cap=2e5,
    grid=None,
    seed=0,
):
    """Smallest matching radius passing the three criteria.

    (a) anisotropy eta(R0) < eta_tol, (b) R0 >= scale_mult (C6/(C_E C22))^(1/3),
    (c) K0 plateau: drift < plateau_tol over [R0, 1.5 R0]. The anisotropy
    criterion is evaluated on the s-d coupling of the block regardless of
    basis size.
    """
    if ev.field.c_e <= 0.0:
        return dispersion_tail_radius(ev)
    c22 = p2_matrix_element(2, 0, 2, 0)
    r_scale = scale_mult * (ev.params.c6 / (ev.field.c_e * c22)) ** (1.0 / 3.0)
    # eta ~ mu c_e C20 / (3 R) at large R: start from its crossing
    c20 = abs(p2_matrix_element(0, 0, 2, 0))
    r_eta = ev.params.mu * ev.field.c_e * c20 / (3.0 * eta_tol)
    r0 = max(r_scale, r_eta, 2.0 * ev.cutoff.r_c)
    two_ch = ev if ev.basis.n == 2 else PotentialMatrixEvaluator(
        ev.params, ev.field, build_basis("even", 0, 2), ev.short_range, ev.cutoff
    )
    while r0 <= r_cap:
        if two_ch.anisotropy(r0) < eta_tol:
            k0s = solve_mqdt(ev, energy, r0=r0, grid=grid, seed=seed).k0
            if k0s.stability < plateau_tol:
                return r0
        r0 *= 1.3
    raise MqdtError(
        f"no matching radius below {r_cap:g} a0 satisfied the anisotropy and "
        f"plateau criteria (field {ev.field.strength_kvcm} kV/cm)"
    )


@dataclass
class MqdtResult:
    matrices: object
    k0: ShortRangeK
    r0: float
    sigma: float
    z_list: list
    elapsed: float
    defect0: float = math.nan


def physical_k(k0, z_list, energy=None, field=None, meta=None):
    """Physical K/S/T from a short-range K0 and per-channel Z coefficients."""
    zfb = np.array([z.z_fb for z in z_list])
    zfc = np.array([z.z_fc for z in z_list])
    zgb = np.array([z.z_gb for z in z_list])
    zgc = np.array([z.z_gc for z in z_list])
    n = len(z_list)
    eye = np.eye(n)
    c1 = zfb[:, None] * eye + zgb[:, None] * k0.k0
    c2 = zfc[:, None] * eye + zgc[:, None] * k0.k0
    return k_s_t_from_coefficients(c1, c2, energy=energy, field=field, meta=meta or {})


def solve_mqdt(
    ev,
    energy,
    r0=None,
    grid=None,
    scan_factors=(1.0, 1.1, 1.2, 1.35, 1.5),
    seed=0,
    dps=None,
):
    """Full MQDT pipeline at one (energy, field) point.

    Propagates to 1.5 R0 once, matches at the scan radii for the plateau
    metric, and assembles the physical matrices from the R0 match.
    """
    t_start = time.perf_counter()
    if grid is None:
        grid = RadialGrid()
    if r0 is None:
        r0 = choose_r0(ev, energy, grid=grid, seed=seed)
    tails = channel_tails(ev)
    radii = [r0 * fac for fac in scan_factors]
    g = RadialGrid(
        r_start=grid.r_start,
        r_end=radii[-1],
        points_per_wavelength=grid.points_per_wavelength,
        r_frac=grid.r_frac,
        wkb_efolds=grid.wkb_efolds,
    )
    sol = propagate(ev, energy, g, capture_radii=radii, seed=seed)
    contexts = [
        match_at_r0(cap, tails, energy, ev.params.mu, dps=dps)
        for cap in sol.captures[: len(radii)]
    ]
    k0 = short_range_k(contexts, energy=energy, field=ev.field)
    z_list = [
        get_pair(t.n, t.l, energy.e_au, t.c_n, ev.params.mu).z_coefficients()
        for t in tails
    ]
    matrices = physical_k(
        k0, z_list, energy=energy, field=ev.field,
        meta={"r0": k0.r0, "pipeline": "mqdt", "n_steps": sol.n_steps},
    )
    sigma = cross_section(matrices, energy.k)
    # plateau metric on conditioning-robust scalars: the implied s-channel
    # defect plus the l >= 1 diagonal defects (the raw (1,1) element of
    # J I^-1 mixes the near-degenerate closed-channel rows and is noise at
    # weak coupling even though every observable is stable)
    def defect_vector(ctx):
        k0_i = short_range_k([ctx], energy=energy, field=ev.field)
        m_i = physical_k(k0_i, z_list)
        vec = [s_channel_defect(m_i, z_list[0])]
        vec += [k0_i.k0[j, j] for j in range(1, len(tails))]
        return np.array(vec)

    base_vec = defect_vector(contexts[0])
    drift = 0.0
    for ctx in contexts[1:]:
        d = np.abs(defect_vector(ctx) - base_vec) / (1.0 + np.abs(base_vec))
        drift = max(drift, float(np.max(d)))
    k0.stability = drift
    return MqdtResult(
        matrices=matrices,
        k0=k0,
        r0=k0.r0,
        sigma=sigma,
        z_list=z_list,
        elapsed=time.perf_counter() - t_start,
        defect0=s_channel_defect(matrices, z_list[0]),
    )


def eigenphases(matrices, tol=1e-6):
    """Eigenphases from the unitary S, each reduced to (-pi/2, pi/2]."""
    if matrices.unitarity_defect > tol:
        raise MqdtError(
            f"S is not unitary within {tol} (defect {matrices.unitarity_defect:.2e})"
        )
    lam = np.linalg.eigvals(matrices.s_matrix)
    phases = np.angle(lam) / 2.0
    out = []
    for p in phases:
        while p <= -math.pi / 2:
            p += math.pi
        while p > math.pi / 2:
            p -= math.pi
        out.append(p)
    return sorted(out)


def two_channel_driver(
    params,
    field,
    energy,
    short_range,
    cutoff=None,
    r0=None,
    grid=None,
    seed=0,
):
    """The (l = 0, 2), m = 0 model pipeline used throughout the analysis."""
    from .potential import CutoffSpec

    basis = build_basis("even", 0, 2)
    ev = PotentialMatrixEvaluator(
        params, field, basis, short_range, cutoff or CutoffSpec()
    )
    return solve_mqdt(ev, energy, r0=r0, grid=grid, seed=seed)
