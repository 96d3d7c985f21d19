"""Python access to the semiclassical mean-field lab.

Functions that produce reports return parsed JSON dictionaries. Everything
else passes NumPy arrays through unchanged.
"""

import json

from . import _core
from ._core import (
    Error,
    alt_oracle,
    conjugate_momentum_length,
    hartree_evolve,
    holder_oracle,
    mixing_oracle,
    rate_fit,
    read_dop1,
    read_psf1,
    trace_norm,
    vlasov_evolve,
    weyl_quantize,
    wigner_transform,
    write_dop1,
    write_psf1,
)

__all__ = [
    "Error",
    "alt_oracle",
    "conjugate_momentum_length",
    "hartree_evolve",
    "holder_oracle",
    "mixing_oracle",
    "parse_config",
    "rate_fit",
    "read_dop1",
    "read_psf1",
    "run_bound_check",
    "run_experiment",
    "schatten",
    "trace_norm",
    "vlasov_evolve",
    "weyl_quantize",
    "wigner_transform",
    "write_dop1",
    "write_psf1",
]


def schatten(matrix, hbar, p):
    """SchattenReport dictionary with keys p, schatten, semiclassical, trace, opnorm."""
    return json.loads(_core.schatten(matrix, hbar, list(p)))


def parse_config(text):
    return json.loads(_core.parse_config(text))


def run_experiment(config_text):
    return json.loads(_core.run_experiment(config_text))


def run_bound_check(name, config_text):
    return json.loads(_core.run_bound_check(name, config_text))
