"""Conversion constants, loaded from the versioned table bundled with the package.

Everything internal runs in Hartree atomic units; these factors are applied
only when crossing the API boundary (kV/cm, nK, amu in; a.u. inside).
"""

import json
from importlib import resources

_TABLE_FILE = "constants_v1.json"


def load_table(name=_TABLE_FILE):
    """Return the raw constants table (dict) from the bundled data file."""
    with resources.files("dipscat.data").joinpath(name).open() as fh:
        return json.load(fh)


_TABLE = load_table()

CONSTANTS_VERSION = _TABLE["version"]

#: Boltzmann constant in Hartree per kelvin.
KB_AU_PER_K = _TABLE["entries"]["boltzmann_au_per_kelvin"]["value"]

#: dc electric field, atomic units per kV/cm (100 kV/cm = 1.94401e-5 a.u.).
FIELD_AU_PER_KVCM = _TABLE["entries"]["field_au_per_kvcm"]["value"]

#: Bohr radius in metres (lengths in this package are in a0).
BOHR_RADIUS_M = _TABLE["entries"]["bohr_radius_m"]["value"]

#: Electron masses per unified atomic mass unit.
ME_PER_AMU = _TABLE["entries"]["electron_masses_per_amu"]["value"]
