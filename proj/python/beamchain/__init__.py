"""Port-Hamiltonian Euler-Bernoulli beam chains: model validation, structure-
preserving discretization, and stability diagnostics.

The heavy lifting happens in the C++ extension ``_beamchain``; this package
adds dict/JSON conveniences on top.
"""

import json as _json

from ._beamchain import (  # noqa: F401
    Bundle,
    ChainError,
    Model,
    assemble,
    check_boundary_matrices,
    check_jump_monotonicity,
    fit_decay,
    uniform_beam_oracle,
    validate_regularity,
)
from . import _beamchain as _core

__all__ = [
    "Bundle",
    "ChainError",
    "Model",
    "assemble",
    "build_chain",
    "check_boundary_matrices",
    "check_jump_monotonicity",
    "fit_decay",
    "load_scenario",
    "run_report",
    "uniform_beam_oracle",
    "validate_regularity",
]

__version__ = "0.1.0"


def _as_json_text(document):
    if isinstance(document, str):
        return document
    if isinstance(document, dict):
        return _json.dumps(document)
    raise TypeError("document must be a dict or a JSON string")


def build_chain(document, lenient=False):
    """Parse and validate a chain spec document (dict or JSON string)."""
    return _core.build_chain(_as_json_text(document), lenient)


def load_scenario(path):
    """Read a chain spec document from a JSON file into a dict."""
    with open(path) as f:
        return _json.load(f)


def run_report(document, stage="full", **kwargs):
    """Run the staged analysis pipeline and return the report as a dict.

    Stages: check, spectrum, sweep, simulate, full. Keyword overrides:
    cells, T, dt, beta_max, sweep_samples, seed.
    """
    text = _core.run_report(_as_json_text(document), stage, **kwargs)
    return _json.loads(text)
