import json
import math
from typing import Callable

import pandas as pd

from muutils.json_serialize import (
    SerializableDataclass,
    serializable_dataclass,
    serializable_field,
)
from sqwalk.csvio import CsvSeries
from sqwalk.runutils import DEFAULT_SEED
from sqwalk.util import validate_rank

# pylint: disable=too-many-instance-attributes


def _optional_int_list(data: dict, key: str) -> list[int] | None:
    value = data[key]
    return None if value is None else [int(v) for v in value]


@serializable_dataclass
class ExperimentSpec(SerializableDataclass):
    """parameters of a named experiment, read from a JSON document

    every experiment reads only the fields it needs; the rest keep their defaults
    """

    name: str = serializable_field(default="uniform-sweep")
    ns: list[int] = serializable_field(default_factory=lambda: [6])
    epsilons: list[float] = serializable_field(
        default_factory=lambda: [3.0, 4.0, 5.0, 6.0, 7.0],
        loading_fn=lambda data: [float(e) for e in data["epsilons"]],
    )
    mean_eta_grid: list[float] = serializable_field(default_factory=list)
    draws: int = serializable_field(default=100)
    candidates: int = serializable_field(default=5)
    q_target: float = serializable_field(default=0.35)
    q_max: float = serializable_field(default=0.05)
    eta_max: float = serializable_field(default=0.996)
    eta_low: float = serializable_field(default=0.0)
    spread_max: float = serializable_field(default=0.6)
    dphi_degrees: list[float] = serializable_field(
        default_factory=lambda: [3.0, 6.0, 9.0, 12.0]
    )
    samples: int = serializable_field(default=1000)
    t_max: int = serializable_field(default=600)
    window: list[int] | None = serializable_field(
        default=None,
        loading_fn=lambda data: _optional_int_list(data, "window"),
    )
    runs: int = serializable_field(default=10)
    seed: int = serializable_field(default=DEFAULT_SEED)
    out: str | None = serializable_field(default=None)
    threads: int = serializable_field(default=1)

    def __post_init__(self):
        for n in self.ns:
            validate_rank(n, min_rank=2, max_rank=10)
        for key in ("draws", "candidates", "samples", "runs", "threads"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key} must be at least 1, got {getattr(self, key) = }")
        if self.t_max < 0:
            raise ValueError(f"t_max must be non-negative, got {self.t_max = }")
        if any(math.isnan(e) or e < 0 for e in self.epsilons):
            raise ValueError(f"epsilons must be non-negative, got {self.epsilons = }")
        if self.window is not None and len(self.window) != 2:
            raise ValueError(f"window must be [start, end], got {self.window = }")

    @property
    def n(self) -> int:
        """the first rank, for experiments that take a single one"""
        return self.ns[0]

    @classmethod
    def from_file(cls, path: str) -> "ExperimentSpec":
        with open(path, "r", encoding="utf-8") as f:
            data: dict = json.load(f)
        return cls.load(data)


# name -> function building the result table from a spec
EXPERIMENTS: dict[str, Callable] = dict()

# smallest ensembles the registered experiments accept
MIN_FIT_DRAWS: int = 30
MIN_ENSEMBLE_SAMPLES: int = 100


def require_at_least(spec: ExperimentSpec, key: str, minimum: int) -> None:
    value: int = getattr(spec, key)
    if value < minimum:
        raise ValueError(f"experiment {spec.name!r} needs {key} >= {minimum}, got {value}")


def for_each_rank(spec: ExperimentSpec, build: Callable[[int], CsvSeries]) -> CsvSeries:
    """run `build(n)` for every rank in `spec.ns` and stack the tables under a leading `n` column"""
    frames: list[pd.DataFrame] = []
    for n in spec.ns:
        frame: pd.DataFrame = build(n).frame.copy()
        frame.insert(0, "n", n)
        frames.append(frame)
    return CsvSeries(pd.concat(frames, ignore_index=True))
