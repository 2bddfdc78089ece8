"""Outward Numerov integration of the coupled radial equations.

The step schedule is wavelength- and potential-scale-limited and only ever
doubles, so the three-point recurrence can be restarted across a step change
from stored points. Solution-set linear independence is maintained by QR
subspace rotation. Matching onto free motion uses Riccati-Bessel pairs at
two capture radii a quarter wavelength apart; these reduce exactly to
sin(kR - l pi/2), cos(kR - l pi/2) asymptotically, so the extracted K, S, T
carry the standard normalization.
"""

import math
from dataclasses import dataclass, field as _field

import numpy as np
from scipy.special import spherical_jn, spherical_yn


@dataclass(frozen=True)
class RadialGrid:
    """Step-schedule controls for one propagation.

    r_start=None anchors the start inside the repulsive wall where the WKB
    suppression reaches exp(-wkb_efolds). The step never exceeds
    local_wavelength/points_per_wavelength nor r/r_frac.
    """

    r_start: float = None
    r_end: float = 1e4
    points_per_wavelength: int = 40
    r_frac: float = 10.0
    wkb_efolds: float = 30.0


@dataclass
class Capture:
    r: float
    phi: np.ndarray
    dphi: np.ndarray


@dataclass
class SolutionMatrix:
    """Radial solution matrix and derivative at the final radius.

    Columns are linearly independent solutions; `captures` holds snapshots
    at requested interior radii, all in one common column frame.
    """

    phi: np.ndarray
    dphi: np.ndarray
    r: float
    captures: list
    n_steps: int = 0
    n_rescales: int = 0
    n_rotations: int = 0


@dataclass
class ScatteringMatrices:
    k_matrix: np.ndarray
    s_matrix: np.ndarray
    t_matrix: np.ndarray
    energy: object = None
    field: object = None
    unitarity_defect: float = 0.0
    k_asymmetry: float = 0.0
    meta: dict = _field(default_factory=dict)


class PropagationError(RuntimeError):
    pass


# ----------------------------------------------------------------------
# grid construction


def wall_anchor(ev, e_au, efolds=30.0, r_probe_max=None):
    """Start radius inside the repulsive wall: exp(-efolds) WKB suppression.

    Walks inward from the inner classical turning point accumulating the WKB
    integral of sqrt(2 mu (V - E)).
    """
    mu = ev.params.mu
    if r_probe_max is None:
        r_probe_max = max(2.0 * ev.short_range.r_join, 40.0)
    # inner turning point: first zero of V - E scanning outward
    rs = np.geomspace(0.5, r_probe_max, 600)
    v = np.array([ev.isotropic(r) for r in rs])
    above = v > e_au
    if not above[0]:
        raise PropagationError("no repulsive wall found at small r")
    idx = np.argmax(~above)
    if idx == 0:
        raise PropagationError("potential never drops below E inside probe range")
    lo, hi = rs[idx - 1], rs[idx]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ev.isotropic(mid) > e_au:
            lo = mid
        else:
            hi = mid
    r_turn = 0.5 * (lo + hi)
    # accumulate inward
    phase = 0.0
    r = r_turn
    while phase < efolds:
        kappa = math.sqrt(max(2.0 * mu * (ev.isotropic(r) - e_au), 0.0))
        dr = min(0.02 * r, 0.5 / kappa) if kappa > 0 else 0.02 * r
        phase += kappa * dr
        r -= dr
        if r < 0.05:
            break
    return max(r, 0.05)


def _angular_structure(ev):
    """Centrifugal coefficients and the constant dipole coupling matrix."""
    from .channels import p2_coupling_matrix

    ls = np.array(ev.basis.l_values, dtype=float)
    cent = ls * (ls + 1.0) / (2.0 * ev.params.mu)
    return cent, p2_coupling_matrix(ev.basis)


def _allowed_step_profile(ev, e_au, r_lo, r_hi, ppw, r_frac, n_samples=2400):
    """Suffix-min of the allowed step over [r_lo, r_hi] on a log grid.

    Using the suffix minimum guarantees a doubling-only schedule never
    overshoots a tighter region further out (turning points make the raw
    local wavelength non-monotonic).
    """
    cent, coup = _angular_structure(ev)
    rs = np.geomspace(r_lo, r_hi, n_samples)
    iso = ev.isotropic(rs)
    dip = ev.dipole_radial(rs)
    diag = (
        iso[:, None]
        + cent[None, :] / rs[:, None] ** 2
        + dip[:, None] * np.diag(coup)[None, :]
    )
    vmin = diag.min(axis=1)
    k2 = 2.0 * ev.params.mu * np.abs(e_au - vmin)
    with np.errstate(divide="ignore"):
        lam = 2.0 * math.pi / np.sqrt(k2)
    h = np.minimum(lam / ppw, rs / r_frac)
    h_suffix = np.minimum.accumulate(h[::-1])[::-1]
    return rs, h_suffix


def build_steps(ev, e_au, r_start, r_stop, ppw=40, r_frac=10.0):
    """Plan the grid: point radii plus (i_prev, i_cur, h) recurrence steps."""
    rs_prof, h_prof = _allowed_step_profile(ev, e_au, r_start, r_stop, ppw, r_frac)

    def h_allowed(r):
        # suffix-min is non-decreasing in r, so the sample at or left of r
        # is the conservative bound (interpolation would leak large values
        # backward across sharp potential features)
        i = np.searchsorted(rs_prof, r, side="right") - 1
        return float(h_prof[max(i, 0)])

    h = h_allowed(r_start)
    pts = [r_start, r_start + h]
    steps = []
    i_prev, i_cur = 0, 1
    since_double = 0
    while pts[i_cur] < r_stop:
        r = pts[i_cur]
        if i_cur >= 2 and since_double >= 2 and 2.0 * h <= 0.999 * h_allowed(r + 2.0 * h):
            h *= 2.0
            i_prev = i_cur - 2
            since_double = 0
        steps.append((i_prev, i_cur, h))
        pts.append(r + h)
        i_prev, i_cur = i_cur, len(pts) - 1
        since_double += 1
    return np.array(pts), steps


# ----------------------------------------------------------------------
# propagation


def _derivative_from_window(window, n):
    """d(phi)/dr at the last window point via an interpolating polynomial.

    Equivalent to the one-sided 5-point stencil on uniform grids and stays
    4th order across step-doubling boundaries.
    """
    pts = window[-min(5, len(window)):]
    r0 = pts[-1][0]
    xs = np.array([p[0] - r0 for p in pts])
    vand = np.vander(xs, increasing=True)  # columns 1, x, x^2, ...
    rhs = np.stack([p[1].reshape(-1) for p in pts])
    coef = np.linalg.solve(vand, rhs)
    return coef[1].reshape(n, n)


def seed_matrix(n, scale=1e-3, seed=0):
    """Identity plus a small symmetric perturbation: full-rank, symmetric."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-1.0, 1.0, size=(n, n))
    return np.eye(n) + scale * 0.5 * (noise + noise.T)


def propagate(
    ev,
    energy,
    grid=RadialGrid(),
    capture_radii=(),
    seed_scale=1e-3,
    seed=0,
    rotation_interval=2000,
    cond_limit=1e7,
    trajectory=None,
):
    """Propagate the solution matrix outward and snapshot at capture radii.

    Returns a :class:`SolutionMatrix` whose final state sits at the first
    grid point past ``grid.r_end``; every requested capture radius is
    recorded at the first grid point at or beyond it (actual radius stored).
    """
    n = ev.basis.n
    e_au = energy.e_au
    mu = ev.params.mu
    r_start = grid.r_start
    if r_start is None:
        r_start = wall_anchor(ev, e_au, grid.wkb_efolds)
    pending = sorted(set(list(capture_radii) + [grid.r_end]))
    r_stop = pending[-1]
    pts, steps = build_steps(
        ev, e_au, r_start, r_stop, grid.points_per_wavelength, grid.r_frac
    )

    # vectorized per-point potential pieces
    iso = ev.isotropic(pts)
    dip = ev.dipole_radial(pts)
    cent, coup = _angular_structure(ev)
    didx = np.arange(n)

    def f_matrix(i):
        f = (2.0 * mu * dip[i]) * coup
        f[didx, didx] += 2.0 * mu * (iso[i] + cent / pts[i] ** 2 - e_au)
        return f

    phi_prev = np.zeros((n, n))
    phi_cur = seed_matrix(n, seed_scale, seed)
    eye = np.eye(n)
    window = [(pts[0], phi_prev.copy()), (pts[1], phi_cur.copy())]
    captures = []
    cap_iter = iter(pending)
    next_cap = next(cap_iter)
    f_cache = {0: f_matrix(0), 1: f_matrix(1)}
    n_rescale = 0
    n_rot = 0
    rows = [] if trajectory is not None else None

    def apply_transform(c):
        nonlocal phi_prev, phi_cur
        phi_prev = phi_prev @ c
        phi_cur = phi_cur @ c
        for w in range(len(window)):
            window[w] = (window[w][0], window[w][1] @ c)
        for cap in captures:
            cap.phi = cap.phi @ c
            cap.dphi = cap.dphi @ c

    for count, (i_prev, i_cur, h) in enumerate(steps):
        i_new = i_cur + 1
        c = h * h / 12.0
        if i_prev not in f_cache:
            f_cache[i_prev] = f_matrix(i_prev)
        if i_cur not in f_cache:
            f_cache[i_cur] = f_matrix(i_cur)
        f_new = f_matrix(i_new)
        # window may have been built before a doubling; recurrence only needs
        # phi at i_prev which is phi_prev except right after a doubling
        if window[-2][0] != pts[i_prev]:
            for r_w, phi_w in reversed(window):
                if r_w == pts[i_prev]:
                    phi_prev = phi_w
                    break
            else:
                raise PropagationError("doubling lost its restart point")
        rhs = (2.0 * eye + 10.0 * c * f_cache[i_cur]) @ phi_cur - (
            eye - c * f_cache[i_prev]
        ) @ phi_prev
        phi_new = np.linalg.solve(eye - c * f_new, rhs)
        f_cache[i_new] = f_new
        for k_old in list(f_cache):
            if k_old < i_new - 3:
                del f_cache[k_old]

        phi_prev, phi_cur = phi_cur, phi_new
        window.append((pts[i_new], phi_new.copy()))
        if len(window) > 6:
            window.pop(0)
        if rows is not None:
            rows.append((pts[i_new], np.diag(phi_new).copy()))

        if count % 25 == 0:
            m = np.max(np.abs(phi_cur))
            if not np.isfinite(m):
                raise PropagationError("propagation overflowed to non-finite values")
            if m > 1e120:
                apply_transform(eye / m)
                n_rescale += 1
        # sub-barrier channels diverge power-law fast (a decade of r costs
        # cond ~ 10^(2l+1)), so the condition check must ride the same
        # cadence as the overflow check, not a sparse schedule
        need_rotation = (count + 1) % rotation_interval == 0
        if not need_rotation and n > 1 and count % 25 == 0:
            need_rotation = np.linalg.cond(phi_cur) > cond_limit
        if need_rotation:
            q, rmat = np.linalg.qr(phi_cur)
            if np.min(np.abs(np.diag(rmat))) == 0.0:
                raise PropagationError("rank collapse during propagation")
            apply_transform(np.linalg.inv(rmat))
            n_rot += 1

        while next_cap is not None and pts[i_new] >= next_cap:
            dphi = _derivative_from_window(window, n)
            captures.append(Capture(r=pts[i_new], phi=phi_cur.copy(), dphi=dphi))
            next_cap = next(cap_iter, None)
        if next_cap is None:
            break

    if trajectory is not None:
        with open(trajectory, "w") as fh:
            fh.write("r," + ",".join(f"phi_{i}{i}" for i in range(n)) + "\n")
            for r_i, d in rows:
                fh.write(f"{r_i!r}," + ",".join(repr(x) for x in d) + "\n")

    last = captures[-1]
    return SolutionMatrix(
        phi=last.phi,
        dphi=last.dphi,
        r=last.r,
        captures=captures,
        n_steps=len(steps),
        n_rescales=n_rescale,
        n_rotations=n_rot,
    )


def reorthogonalize(sol):
    """Replace columns by an orthonormal combination (same solution subspace)."""
    q, rmat = np.linalg.qr(sol.phi)
    if np.min(np.abs(np.diag(rmat))) == 0.0:
        raise PropagationError("rank collapse: solution columns are dependent")
    c = np.linalg.inv(rmat)
    return SolutionMatrix(
        phi=sol.phi @ c,
        dphi=sol.dphi @ c,
        r=sol.r,
        captures=sol.captures,
        n_steps=sol.n_steps,
        n_rescales=sol.n_rescales,
        n_rotations=sol.n_rotations,
    )


# ----------------------------------------------------------------------
# matching and matrices


def riccati_pair(l, x):
    """(s_l, c_l) = (x j_l(x), -x y_l(x)); -> (sin, cos)(x - l pi/2) at large x."""
    return x * spherical_jn(l, x), -x * spherical_yn(l, x)


def asymptotic_match(cap1, cap2, k, basis):
    """Solve phi = s_l c1 + c_l c2 per channel from values at two radii."""
    n = basis.n
    c1 = np.empty((n, n))
    c2 = np.empty((n, n))
    for i, ch in enumerate(basis.channels):
        s1, cc1 = riccati_pair(ch.l, k * cap1.r)
        s2, cc2 = riccati_pair(ch.l, k * cap2.r)
        mat = np.array([[s1, cc1], [s2, cc2]])
        det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
        if abs(det) < 1e-12:
            raise PropagationError(
                f"singular matching matrix for l={ch.l} at r={cap1.r:g},{cap2.r:g}"
            )
        sol = np.linalg.solve(mat, np.stack([cap1.phi[i], cap2.phi[i]]))
        c1[i], c2[i] = sol[0], sol[1]
    return c1, c2


def k_s_t_from_coefficients(c1, c2, energy=None, field=None, meta=None):
    """K = c2 c1^-1, S = (c1 + i c2)(c1 - i c2)^-1, T = (S-1)/(2i).

    S acts from the right so the solution-frame matrix cancels: with
    K = c2 c1^-1 symmetric this is (1 + iK)(1 - iK)^-1, manifestly unitary.
    """
    n = c1.shape[0]
    try:
        s_mat = np.linalg.solve((c1 - 1j * c2).T, (c1 + 1j * c2).T).T
    except np.linalg.LinAlgError as exc:
        raise PropagationError(f"degenerate matching coefficients: {exc}") from exc
    t_mat = (s_mat - np.eye(n)) / 2j
    try:
        k_mat = np.linalg.solve(c1.T, c2.T).T
    except np.linalg.LinAlgError:
        # exactly on resonance c1 is singular; K diverges there
        try:
            k_mat = np.real(1j * np.linalg.solve((np.eye(n) + s_mat).T, (np.eye(n) - s_mat).T).T)
        except np.linalg.LinAlgError:
            k_mat = np.full((n, n), np.inf)
    defect = float(np.max(np.abs(s_mat.conj().T @ s_mat - np.eye(n))))
    asym = float(np.max(np.abs(k_mat - k_mat.T))) if np.all(np.isfinite(k_mat)) else math.inf
    return ScatteringMatrices(
        k_matrix=k_mat,
        s_matrix=s_mat,
        t_matrix=t_mat,
        energy=energy,
        field=field,
        unitarity_defect=defect,
        k_asymmetry=asym,
        meta=meta or {},
    )


def cross_section(matrices, k):
    """Total elastic cross section 8 pi sum |T/k|^2 (identical bosons/fermions)."""
    t = matrices.t_matrix / k
    return float(8.0 * math.pi * np.sum(np.abs(t) ** 2))


def asymptotic_radius(energy, field, parity, params, basis=None, phase_tol=1e-10, cap=1e8):
    """Radius beyond which the residual tail phase budget is below phase_tol.

    The centrifugal term is matched exactly (Riccati-Bessel), so only the
    dipole -C_E/R^3 residues (diagonal and coupling) and the dispersion tail
    enter the budget. Returns (radius, capped_flag).
    """
    k = energy.k
    mu = params.mu
    r6 = (mu * params.c6 / (5.0 * k * phase_tol)) ** 0.2
    r = r6
    if field is not None and field.c_e > 0.0:
        if basis is not None:
            from .channels import p2_matrix_element

            cmax = max(
                abs(p2_matrix_element(ci.l, ci.m, cj.l, cj.m))
                for ci in basis.channels
                for cj in basis.channels
            )
        else:
            cmax = 1.0 / math.sqrt(5.0)
        c3 = field.c_e * cmax
        r3 = math.sqrt(mu * c3 / (2.0 * k * phase_tol))
        r = max(r, r3)
    if r > cap:
        return cap, True
    return r, False


def solve_k_matrix(
    ev,
    energy,
    grid=RadialGrid(),
    phase_tol=1e-10,
    seed_scale=1e-3,
    seed=0,
):
    """Full pipeline: propagate to the asymptotic region and extract K/S/T."""
    r_inf, capped = asymptotic_radius(
        energy, ev.field, ev.basis.parity, ev.params, ev.basis, phase_tol
    )
    quarter = 0.5 * math.pi / energy.k
    g = RadialGrid(
        r_start=grid.r_start,
        r_end=r_inf + quarter,
        points_per_wavelength=grid.points_per_wavelength,
        r_frac=grid.r_frac,
        wkb_efolds=grid.wkb_efolds,
    )
    sol = propagate(
        ev, energy, g, capture_radii=[r_inf, r_inf + quarter],
        seed_scale=seed_scale, seed=seed,
    )
    cap1, cap2 = sol.captures[-2], sol.captures[-1]
    c1, c2 = asymptotic_match(cap1, cap2, energy.k, ev.basis)
    out = k_s_t_from_coefficients(
        c1, c2, energy=energy, field=ev.field,
        meta={"r_inf": r_inf, "r_inf_capped": capped, "n_steps": sol.n_steps},
    )
    return out


def scattering_length(ev, t_start_nk=0.01, rel_tol=1e-3, max_halvings=12, **kw):
    """Zero-field s-wave scattering length via the K-matrix threshold limit.

    Halves the probe energy until the estimate moves by less than rel_tol
    per halving. a_sc = -lim t00 = -lim K00/k.
    """
    from .system import EnergySpec

    if ev.field.c_e != 0.0:
        raise ValueError("scattering_length is defined at zero field")
    if ev.basis.n != 1 or ev.basis.channels[0].l != 0:
        raise ValueError("scattering_length needs a single l=0 channel")
    t_nk = t_start_nk
    prev = None
    for _ in range(max_halvings):
        e = EnergySpec.from_nk(t_nk, ev.params.mu)
        m = solve_k_matrix(ev, e, **kw)
        a = -float(np.real(m.k_matrix[0, 0])) / e.k
        if prev is not None and abs(a - prev) <= rel_tol * max(abs(a), 1e-6):
            return a
        prev = a
        t_nk /= 2.0
    raise PropagationError(
        f"scattering length did not converge below {t_start_nk} nK (last {prev})"
    )
