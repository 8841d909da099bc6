"""Python access to the conelab core: spectral scan, stability tuning, suites."""

import json

from ._core import (
    ConvergenceError,
    DegenerateError,
    DomainError,
    c5,
    connection_coefficient,
    hyp2f1,
    nonlinearity,
    spectrum_scan,
    suite_names,
    tune_blowup_time,
    unstable_eigenvalue,
    version,
    w0,
)
from ._core import run as _run

__version__ = version()


def run(suites, config="", out=""):
    """Run suites; returns (exit_code, manifest dict).  Config errors give code 2 and a message."""
    code, text = _run(list(suites), config, out)
    if code == 2:
        return code, {"error": text}
    return code, json.loads(text)
