"""named, seeded experiments producing CSV tables"""

from sqwalk.csvio import CsvSeries
from sqwalk.experiments import loss, phase  # noqa: F401  (registers experiments)
from sqwalk.experiments.spec import EXPERIMENTS, ExperimentSpec


def run_experiment(spec: ExperimentSpec, threads: int | None = None) -> CsvSeries:
    """run the experiment named by `spec.name`. `threads` overrides `spec.threads`

    raises `KeyError` for unknown names
    """
    if spec.name not in EXPERIMENTS:
        raise KeyError(
            f"unknown experiment {spec.name!r}, expected one of {sorted(EXPERIMENTS)}"
        )
    if threads is not None:
        spec = ExperimentSpec.load({**spec.serialize(), "threads": threads})
    return EXPERIMENTS[spec.name](spec)


__all__ = ["EXPERIMENTS", "ExperimentSpec", "run_experiment"]
