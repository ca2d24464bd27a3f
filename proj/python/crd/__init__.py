"""Top-k discovery of reliable causal rules from tabular data.

The heavy lifting lives in the compiled extension; this package re-exports
the main operations.
"""

from crd._core import (
    Dataset,
    DegeneratePolicy,
    DiscreteScm,
    GraphError,
    IngestError,
    UndefinedEstimate,
    check_admissible,
    discover,
    load_csv,
    run_experiment,
    tau,
    tight_oest_stratum,
    __version__,
)

__all__ = [
    "Dataset",
    "DegeneratePolicy",
    "DiscreteScm",
    "GraphError",
    "IngestError",
    "UndefinedEstimate",
    "check_admissible",
    "discover",
    "load_csv",
    "run_experiment",
    "tau",
    "tight_oest_stratum",
    "__version__",
]
