import math

import pytest
from hypothesis import given, strategies as st

from dipscat.channels import (
    Channel,
    build_basis,
    multipole_coefficient,
    p2_coupling_matrix,
    p2_matrix_element,
    p2_quadrature,
    validate_p2_closed_form,
)


def test_build_basis_enumeration():
    assert build_basis("even", 0, 4).l_values == (0, 2, 4)
    assert build_basis("odd", 0, 3).l_values == (1, 3)
    assert build_basis("even", 3, 4).l_values == (4,)


def test_build_basis_empty_raises():
    with pytest.raises(ValueError):
        build_basis("even", 5, 3)


def test_channel_invariants():
    with pytest.raises(ValueError):
        Channel(1, 2)
    with pytest.raises(ValueError):
        Channel(-1, 0)


def test_p2_selection_rules_bitwise_zero():
    # l + l' odd, |l - l'| > 2, and m mismatch are exact zeros
    assert p2_matrix_element(1, 0, 2, 0) == 0.0
    assert p2_matrix_element(0, 0, 4, 0) == 0.0
    assert p2_matrix_element(2, 0, 2, 1) == 0.0
    assert p2_matrix_element(0, 0, 0, 0) == 0.0


def test_p2_reference_values():
    assert p2_matrix_element(0, 0, 2, 0) == pytest.approx(1.0 / math.sqrt(5.0), abs=1e-14)
    assert p2_matrix_element(1, 0, 1, 0) == pytest.approx(0.4, abs=1e-14)
    assert p2_matrix_element(2, 1, 2, 1) == pytest.approx(1.0 / 7.0, abs=1e-14)
    assert p2_matrix_element(2, 0, 2, 0) == pytest.approx(2.0 / 7.0, abs=1e-14)


def test_p2_quadrature_oracle_values():
    assert p2_quadrature(0, 0, 2, 0) == pytest.approx(0.4472135955, abs=1e-10)
    assert p2_quadrature(1, 0, 1, 0) == pytest.approx(0.4, abs=1e-12)
    assert p2_quadrature(2, 1, 2, 1) == pytest.approx(1.0 / 7.0, abs=1e-12)


def test_p2_closed_form_matches_quadrature_to_l10():
    assert validate_p2_closed_form(l_max=10, tol=1e-12)


@given(
    st.integers(min_value=0, max_value=12),
    st.integers(min_value=0, max_value=12),
    st.integers(min_value=-12, max_value=12),
)
def test_p2_symmetry(l, lp, m):
    assert p2_matrix_element(l, m, lp, m) == p2_matrix_element(lp, m, l, m)


@given(st.integers(min_value=0, max_value=15), st.integers(min_value=0, max_value=15))
def test_p2_diagonal_formula(l, m):
    if m > l:
        return
    expect = (l * (l + 1) - 3 * m * m) / ((2 * l - 1) * (2 * l + 3))
    assert p2_matrix_element(l, m, l, m) == pytest.approx(expect, rel=1e-14)


def test_multipole_coefficient_values():
    assert multipole_coefficient(1, 1, 0) == pytest.approx(2.0, abs=1e-14)
    assert multipole_coefficient(1, 1, 1) == pytest.approx(1.0, abs=1e-14)
    assert multipole_coefficient(1, 1, -1) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        multipole_coefficient(1, 1, 2)


@given(
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=-8, max_value=8),
)
def test_multipole_m_reflection(l, L, m):
    if abs(m) > min(l, L):
        return
    assert multipole_coefficient(l, L, m) == pytest.approx(
        multipole_coefficient(l, L, -m), rel=1e-14
    )


def test_coupling_matrix_phase_and_zeros():
    basis = build_basis("even", 0, 4)
    mat = p2_coupling_matrix(basis)
    # |dl| = 2 entries carry the i^(l'-l) = -1 phase
    assert mat[0, 1] == pytest.approx(-1.0 / math.sqrt(5.0), abs=1e-14)
    assert mat[1, 0] == mat[0, 1]
    assert mat[0, 2] == 0.0  # |dl| = 4
    assert mat[1, 1] == pytest.approx(2.0 / 7.0, abs=1e-14)
