"""Analysis of symmetric first-order systems J f' + B f = lambda H f.

The heavy lifting lives in the C++ extension module `_hamsys`; this package
re-exports it with a couple of conveniences.
"""

from _hamsys import (  # noqa: F401
    ExpressionParseError,
    NumericsError,
    Problem,
    SpecError,
    criteria_registry,
    example_spec,
    examples,
    load,
    load_file,
    run_example,
    __version__,
)

import json as _json


def load_dict(spec):
    """Load a problem from a plain dict in the spec-file layout."""
    return load(_json.dumps(spec))


__all__ = [
    "Problem",
    "SpecError",
    "NumericsError",
    "ExpressionParseError",
    "load",
    "load_file",
    "load_dict",
    "criteria_registry",
    "examples",
    "example_spec",
    "run_example",
    "__version__",
]
