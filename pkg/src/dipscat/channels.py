"""Partial-wave channel bases and angular matrix elements of P2(cos theta).

Even and odd parity decouple, as do different m values, so a basis is always
built for one (parity, m) block. The P2 matrix elements are evaluated in
closed form from the cos-theta ladder coefficients; a Gauss-Legendre
quadrature oracle is provided so the closed forms can be validated against
direct integration of the spherical harmonics.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lpmv, roots_legendre


@dataclass(frozen=True, order=True)
class Channel:
    l: int
    m: int

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError(f"invalid channel (l={self.l}, m={self.m})")


@dataclass(frozen=True)
class ChannelBasis:
    parity: str
    m: int
    l_max: int
    channels: tuple

    @property
    def n(self):
        return len(self.channels)

    @property
    def l_values(self):
        return tuple(c.l for c in self.channels)


def build_basis(parity, m, l_max):
    """All channels (l, m) with l = parity mod 2, |m| <= l <= l_max, ascending l."""
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    rem = 0 if parity == "even" else 1
    ls = [l for l in range(abs(m), l_max + 1) if l % 2 == rem and l >= abs(m)]
    if not ls:
        raise ValueError(f"empty basis: parity={parity}, m={m}, l_max={l_max}")
    return ChannelBasis(
        parity=parity, m=m, l_max=l_max, channels=tuple(Channel(l, m) for l in ls)
    )


def _ladder(l, m):
    # <l-1, m| cos(theta) |l, m>
    return math.sqrt((l * l - m * m) / ((2.0 * l - 1.0) * (2.0 * l + 1.0)))


def p2_matrix_element(l, m, lp, mp):
    """<l m | P2(cos theta) | l' m'> with exact selection-rule zeros.

    Nonzero only for m = m' and l' - l in {-2, 0, +2}; the l + l' odd and
    |l - l'| > 2 cases return exactly 0.0.
    """
    if m != mp or (l + lp) % 2 != 0 or abs(l - lp) > 2:
        return 0.0
    if abs(m) > l or abs(mp) > lp:
        return 0.0
    if l == lp:
        return (l * (l + 1.0) - 3.0 * m * m) / ((2.0 * l - 1.0) * (2.0 * l + 3.0))
    lo = min(l, lp)
    # P2 = (3 cos^2 - 1)/2; the l -> l+2 path is a double cos ladder.
    return 1.5 * _ladder(lo + 1, m) * _ladder(lo + 2, m)


def p2_quadrature(l, m, lp, mp, npts=64):
    """Gauss-Legendre oracle for <l m|P2|l' m'> (normalized theta functions)."""
    if m != mp:
        return 0.0
    x, w = roots_legendre(npts)

    def theta(ll, mm):
        norm = math.sqrt(
            (2.0 * ll + 1.0) / 2.0 * math.factorial(ll - abs(mm)) / math.factorial(ll + abs(mm))
        )
        return norm * lpmv(abs(mm), ll, x)

    p2 = 0.5 * (3.0 * x * x - 1.0)
    return float(np.sum(w * theta(l, m) * p2 * theta(lp, mp)))


def validate_p2_closed_form(l_max=10, tol=1e-12):
    """Assert closed-form P2 elements match the quadrature oracle over a block."""
    for l in range(l_max + 1):
        for lp in range(l_max + 1):
            for m in range(-min(l, lp), min(l, lp) + 1):
                a = p2_matrix_element(l, m, lp, m)
                b = p2_quadrature(l, m, lp, m)
                if abs(a - b) > tol:
                    raise AssertionError(
                        f"P2 element mismatch at (l={l}, lp={lp}, m={m}): {a} vs {b}"
                    )
    return True


def multipole_coefficient(l, L, m):
    """K_{lL}^m = sqrt(C(l+L, l+m) C(l+L, L+m)) of the multipole expansion."""
    if l < 1 or L < 1:
        raise ValueError("multipole orders must be >= 1")
    if abs(m) > min(l, L):
        raise ValueError(f"|m| must not exceed min(l, L), got m={m}")
    return math.sqrt(math.comb(l + L, l + m) * math.comb(l + L, L + m))


def p2_coupling_matrix(basis):
    """Constant angular structure of the dipole term for a basis.

    Entry (i, j) is phase(l_i, l_j) * <l_i m|P2|l_j m> with the i^(l_j - l_i)
    phase reduced to (-1)^((l_j - l_i)/2) inside a parity block, i.e. -1 on
    the |dl| = 2 couplings. Multiplying by the radial factor -C_E f_c / r^3
    gives the full dipole contribution to the potential matrix.
    """
    n = basis.n
    mat = np.zeros((n, n))
    for i, ci in enumerate(basis.channels):
        for j, cj in enumerate(basis.channels):
            elem = p2_matrix_element(ci.l, ci.m, cj.l, cj.m)
            if elem != 0.0:
                phase = -1.0 if abs(ci.l - cj.l) == 2 else 1.0
                mat[i, j] = phase * elem
    return mat
