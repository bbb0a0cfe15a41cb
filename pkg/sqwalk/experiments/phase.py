"""phase-error studies: ensemble evolution per phase spread, long-time stationary
values under static errors, raw individual runs, and envelope decay fits

every ensemble for one spread uses the same master seed, so the Gaussian draws of
different spreads are the same normals rescaled
"""

import math
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.signal import find_peaks
from scipy.stats import linregress

from muutils.json_serialize import (
    SerializableDataclass,
    serializable_dataclass,
    serializable_field,
)
from muutils.logger.timing import TimerContext
from sqwalk.csvio import CsvSeries
from sqwalk.experiments.spec import (
    EXPERIMENTS,
    MIN_ENSEMBLE_SAMPLES,
    ExperimentSpec,
    for_each_rank,
    require_at_least,
)
from sqwalk.logger import get_logger
from sqwalk.noise import AveragedSeries, PhaseModel, run_ensemble, run_trajectory
from sqwalk.runutils import DEFAULT_SEED, register_method, sample_rng
from sqwalk.state import WalkConfig
from sqwalk.util import validate_rank

# pylint: disable=missing-class-docstring, too-many-arguments

MIN_WINDOW: int = 50
# peaks lower than this fraction of the largest deviation are treated as noise
PEAK_PROMINENCE_FRACTION: float = 0.05


def default_window(n: int) -> tuple[int, int]:
    """`[25 sqrt(2^(n-1)), 50 sqrt(2^(n-1))]`, well past the ideal search time,
    stretched to `MIN_WINDOW` steps for small ranks
    """
    half_period: float = math.sqrt(2.0 ** (n - 1))
    start: int = int(math.ceil(25 * half_period))
    return start, max(int(math.floor(50 * half_period)), start + MIN_WINDOW)


def _check_window(window: tuple[int, int]) -> tuple[int, int]:
    start, end = int(window[0]), int(window[1])
    if start < 0 or end < start:
        raise ValueError(f"invalid window [{start}, {end}]")
    if end - start < MIN_WINDOW:
        raise ValueError(f"window [{start}, {end}] is shorter than {MIN_WINDOW} steps")
    return start, end


def phase_evolution(
    n: int,
    dphi_degrees_list: Sequence[float],
    samples: int = 1000,
    t_max: int = 600,
    seed: int = DEFAULT_SEED,
    regimes: Sequence[str] = ("static", "fluctuating"),
    threads: int = 1,
) -> dict[tuple[str, float], AveragedSeries]:
    """ensemble-mean target probability under Gaussian phase errors, keyed by `(regime, dphi_deg)`"""
    validate_rank(n, min_rank=2, max_rank=10)
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples = }")
    cfg = WalkConfig(n=n)
    logger = get_logger()
    results: dict[tuple[str, float], AveragedSeries] = dict()
    for regime in regimes:
        for dphi in dphi_degrees_list:
            model: PhaseModel = PhaseModel.from_degrees(regime, "gaussian", dphi)
            with TimerContext() as timer:
                results[(regime, float(dphi))] = run_ensemble(
                    cfg,
                    phase_model=model,
                    t_max=t_max,
                    samples=samples,
                    master_seed=seed,
                    threads=threads,
                )
            logger.timing(
                f"{regime} ensemble, {n = }, dphi = {dphi} deg, {samples = }: {timer.elapsed_time:.2f}s",
                lvl=15,
            )
    return results


def evolution_table(results: dict[tuple[str, float], AveragedSeries]) -> CsvSeries:
    """long format: one row per `(regime, dphi_deg, t)`"""
    columns: list[str] = ["regime", "dphi_deg", "t", "mean_p", "stderr"]
    if not results:
        return CsvSeries.from_records([], columns=columns)
    frame: pd.DataFrame = pd.concat(
        [
            series.to_frame().assign(regime=regime, dphi_deg=dphi)
            for (regime, dphi), series in results.items()
        ],
        ignore_index=True,
    )
    return CsvSeries(frame[columns])


def stationary_scan(
    ns: Sequence[int],
    dphi_degrees_list: Sequence[float],
    samples: int = 1000,
    window: tuple[int, int] | None = None,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> CsvSeries:
    """time average of the static-error ensemble mean over `window`, per `(n, dphi)`

    `window` defaults to `default_window(n)` and must span at least `MIN_WINDOW` steps
    """
    rows: list[dict] = []
    for n in ns:
        start, end = _check_window(window if window is not None else default_window(n))
        evolutions = phase_evolution(
            n, dphi_degrees_list, samples, end, seed, regimes=("static",), threads=threads
        )
        for (_, dphi), series in evolutions.items():
            rows.append(
                dict(
                    n=n,
                    dphi_deg=dphi,
                    window_start=start,
                    window_end=end,
                    stationary=series.window_mean(start, end),
                )
            )
    return CsvSeries.from_records(
        rows, columns=["n", "dphi_deg", "window_start", "window_end", "stationary"]
    )


def phase_individual_runs(
    n: int,
    dphi_deg: float,
    runs: int = 10,
    t_max: int = 600,
    seed: int = DEFAULT_SEED,
) -> CsvSeries:
    """raw static-error series of single runs; run `k` is ensemble member `k` of `seed`"""
    validate_rank(n, min_rank=2, max_rank=10)
    cfg = WalkConfig(n=n)
    model: PhaseModel = PhaseModel.from_degrees("static", "gaussian", dphi_deg)
    run_col: list[np.ndarray] = []
    t_col: list[np.ndarray] = []
    p_col: list[np.ndarray] = []
    for k in range(runs):
        probs: np.ndarray = run_trajectory(
            cfg, phase_model=model, t_max=t_max, rng=sample_rng(seed, k)
        )
        run_col.append(np.full(t_max + 1, k))
        t_col.append(np.arange(t_max + 1))
        p_col.append(probs)
    if runs == 0:
        return CsvSeries.from_records([], columns=["run", "t", "p"])
    return CsvSeries.from_columns(
        run=np.concatenate(run_col), t=np.concatenate(t_col), p=np.concatenate(p_col)
    )


@serializable_dataclass(frozen=True)
class DecayFit(SerializableDataclass):
    """log-linear fit `ln|p(t) - baseline| ~ intercept + slope t` through the envelope peaks"""

    slope: float = serializable_field(default=math.nan)
    intercept: float = serializable_field(default=math.nan)
    r_squared: float = serializable_field(default=math.nan)
    peaks: list[int] = serializable_field(default_factory=list)


def envelope_decay(
    series: AveragedSeries,
    baseline: float,
    t_lo: int,
    t_hi: int,
) -> DecayFit:
    """fit the decay of the peaks of `|mean_p(t) - baseline|` for `t_lo <= t <= t_hi`

    falls back to every point of the window when it holds fewer than two peaks
    """
    if not (0 <= t_lo < t_hi < len(series.t)):
        raise ValueError(f"window [{t_lo}, {t_hi}] outside series of length {len(series.t)}")
    t: np.ndarray = series.t[t_lo : t_hi + 1]
    deviation: np.ndarray = np.abs(series.mean_p[t_lo : t_hi + 1] - baseline)
    peaks, _ = find_peaks(deviation, prominence=PEAK_PROMINENCE_FRACTION * float(np.max(deviation)))
    idx: np.ndarray = peaks if len(peaks) >= 2 else np.flatnonzero(deviation > 0)
    if len(idx) < 2:
        return DecayFit()
    fit = linregress(t[idx].astype(float), np.log(deviation[idx]))
    return DecayFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue**2),
        peaks=[int(t[i]) for i in idx],
    )


# registry
# ==================================================


@register_method(EXPERIMENTS, "phase-evolution")
def _run_phase_evolution(spec: ExperimentSpec) -> CsvSeries:
    require_at_least(spec, "samples", MIN_ENSEMBLE_SAMPLES)
    return for_each_rank(
        spec,
        lambda n: evolution_table(
            phase_evolution(
                n,
                spec.dphi_degrees,
                spec.samples,
                spec.t_max,
                spec.seed,
                threads=spec.threads,
            )
        ),
    )


@register_method(EXPERIMENTS, "stationary")
def _run_stationary(spec: ExperimentSpec) -> CsvSeries:
    require_at_least(spec, "samples", MIN_ENSEMBLE_SAMPLES)
    return stationary_scan(
        spec.ns,
        spec.dphi_degrees,
        spec.samples,
        tuple(spec.window) if spec.window is not None else None,  # type: ignore[arg-type]
        spec.seed,
        spec.threads,
    )


@register_method(EXPERIMENTS, "phase-runs")
def _run_phase_runs(spec: ExperimentSpec) -> CsvSeries:
    return for_each_rank(
        spec,
        lambda n: phase_individual_runs(
            n, spec.dphi_degrees[0], spec.runs, spec.t_max, spec.seed
        ),
    )
