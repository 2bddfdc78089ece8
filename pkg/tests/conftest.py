"""Shared fixtures and duck-typed model potentials for oracle tests."""

import numpy as np
import pytest

from dipscat.channels import build_basis
from dipscat.potential import CutoffSpec, ShortRangeModel
from dipscat.system import FieldSpec, SystemParams


class ModelEvaluator:
    """Minimal evaluator interface over an arbitrary isotropic potential.

    Matches the surface the propagator consumes (basis, params.mu,
    vectorized isotropic/dipole_radial), so closed-form oracle potentials
    (free, hard sphere, square well) can be propagated with the production
    machinery.
    """

    def __init__(self, params, basis, viso=None, field=None):
        self.params = params
        self.basis = basis
        self.field = field or FieldSpec.zero()
        self.short_range = ShortRangeModel(c12=1.0)
        self.cutoff = CutoffSpec()
        self._viso = viso

    def isotropic(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r) if self._viso is None else np.asarray(self._viso(r), dtype=float)
        return float(out) if out.ndim == 0 else out

    def dipole_radial(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        return float(out) if out.ndim == 0 else out


@pytest.fixture(scope="session")
def rb_params():
    return SystemParams.rb85_like()


@pytest.fixture(scope="session")
def swave_basis():
    return build_basis("even", 0, 0)
