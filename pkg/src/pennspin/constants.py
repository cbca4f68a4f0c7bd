"""Physical constants table (CODATA 2018, SI units).

The table can be replaced wholesale or in part by pointing the
``PENNSPIN_CONSTANTS`` environment variable at a JSON file whose keys are a
subset of :data:`CODATA_2018`.
"""

from __future__ import annotations

import json
import os
from types import MappingProxyType

ENV_VAR = "PENNSPIN_CONSTANTS"

CODATA_2018 = MappingProxyType(
    {
        "e": 1.602176634e-19,  # elementary charge, C (exact)
        "m_e": 9.1093837015e-31,  # electron mass, kg
        "hbar": 1.054571817e-34,  # reduced Planck constant, J s
        "epsilon_0": 8.8541878128e-12,  # vacuum permittivity, F/m
    }
)


def load_constants(path: str | os.PathLike | None = None) -> MappingProxyType:
    """Return the active constants table.

    ``path`` takes precedence over the environment variable. Unknown keys in the
    override file are rejected so that typos cannot silently fall back to the
    defaults.
    """
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return CODATA_2018
    with open(path, encoding="utf-8") as fh:
        override = json.load(fh)
    unknown = set(override) - set(CODATA_2018)
    if unknown:
        raise KeyError(f"unknown constants in {path}: {sorted(unknown)}")
    table = dict(CODATA_2018)
    table.update({k: float(v) for k, v in override.items()})
    return MappingProxyType(table)
