"""Random conductance homogenization laboratory."""

from ._homlab import (
    ArgumentError,
    ConfigError,
    SolverError,
    correctors,
    experiment_names,
    reference_abar,
    run,
    sample_field,
)

__all__ = [
    "ArgumentError",
    "ConfigError",
    "SolverError",
    "columns",
    "correctors",
    "experiment_names",
    "reference_abar",
    "run",
    "sample_field",
]


def columns(result):
    """Rows of a run() result as a dict of column lists, numbers parsed."""

    def parse(cell):
        try:
            return float(cell)
        except ValueError:
            return cell

    cols = {name: [] for name in result["header"]}
    for row in result["rows"]:
        for name, cell in zip(result["header"], row):
            cols[name].append(parse(cell))
    return cols
