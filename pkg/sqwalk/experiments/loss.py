"""loss studies: uniform-loss sweep against the leading-order theory, and the
direction-dependent-loss studies comparing `p_max({eta})` with uniform references

`p_max` of a direction-dependent set is searched over `1 <= t <= 3 max(t_m(<eta>), 1)`
"""

import math
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit

from muutils.json_serialize import (
    SerializableDataclass,
    serializable_dataclass,
    serializable_field,
)
from muutils.logger.timing import TimerContext
from muutils.statcounter import StatCounter
from sqwalk.analytics import (
    empirical_lower_bound,
    eta_from_epsilon,
    loss_statistics_batch,
    optimal_time,
    pmax_leading,
    x_parameter,
)
from sqwalk.csvio import CsvSeries
from sqwalk.experiments.sampling import (
    attenuated_etas,
    max_rms_deviation,
    sample_constrained_etas,
    sample_low_w_etas,
    sample_uniform_etas,
)
from sqwalk.experiments.spec import (
    EXPERIMENTS,
    MIN_FIT_DRAWS,
    ExperimentSpec,
    for_each_rank,
    require_at_least,
)
from sqwalk.logger import get_logger
from sqwalk.noise import UniformLoss, simulate_pmax, simulate_pmax_batch
from sqwalk.runutils import DEFAULT_SEED, register_method, sample_rng
from sqwalk.state import WalkConfig
from sqwalk.util import TOL_ALGEBRAIC, InfeasibleParameterError, validate_rank

# pylint: disable=missing-class-docstring, too-many-arguments, too-many-locals

FIT_DEGENERATE_Q2: float = 1e-12
B_JUMPS_REPORTED: int = 3


def pmax_horizon(mean_eta: float, n: int) -> int:
    """last step searched for `p_max` at mean transmission `mean_eta`"""
    if mean_eta == 0.0:
        return 3
    return 3 * max(optimal_time(mean_eta, n), 1)


def _pmax_directional(
    cfg: WalkConfig,
    etas: np.ndarray,
    reference: np.ndarray,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """`p_max` and its step for each row of `etas` and for uniform loss at each `reference`

    both searches use the horizon of the row's own mean transmission
    """
    horizons: np.ndarray = np.array([pmax_horizon(float(m), cfg.n) for m in etas.mean(axis=1)])
    ref_horizons: np.ndarray = np.array([pmax_horizon(float(r), cfg.n) for r in reference])
    ref_rows: np.ndarray = np.repeat(reference[:, None], cfg.n, axis=1)
    p_max, t_argmax = simulate_pmax_batch(
        cfg,
        np.concatenate([etas, ref_rows], axis=0),
        np.concatenate([horizons, ref_horizons]),
        t_min=1,
        threads=threads,
    )
    b: int = etas.shape[0]
    return p_max[:b], t_argmax[:b], p_max[b:], t_argmax[b:]


# uniform loss
# ==================================================


def sweep_uniform_loss(
    ns: Sequence[int],
    epsilons: Sequence[float],
    seed: int = DEFAULT_SEED,
) -> CsvSeries:
    """simulated maximum over `0 <= t <= 3 t_m` against `pmax_leading`, for every `(n, epsilon)`

    `epsilon = inf` is the lossless walk. `seed` is unused: the sweep is deterministic
    """
    del seed
    logger = get_logger()
    rows: list[dict] = []
    for n in ns:
        validate_rank(n, min_rank=2, max_rank=10)
        cfg = WalkConfig(n=n)
        for epsilon in epsilons:
            eta: float = 1.0 if math.isinf(epsilon) else eta_from_epsilon(epsilon)
            x, eps = x_parameter(eta, n)
            t_m: int = optimal_time(eta, n)
            p_sim, t_argmax = simulate_pmax(cfg, UniformLoss(eta), 0, 3 * max(t_m, 1))
            rows.append(
                dict(
                    n=n,
                    epsilon=eps,
                    x=x,
                    p_max_simulated=p_sim,
                    p_max_theory=pmax_leading(x),
                    t_argmax=t_argmax,
                    t_m=t_m,
                )
            )
            logger.progress(rows[-1], lvl=20)
    return CsvSeries.from_records(
        rows,
        columns=["n", "epsilon", "x", "p_max_simulated", "p_max_theory", "t_argmax", "t_m"],
    )


# Taylor coefficient
# ==================================================


@serializable_dataclass(frozen=True)
class FitResult(SerializableDataclass):
    """zero-intercept quadratic fit `p_max({eta}) - p_max(<eta>) = b Q^2` at one grid point"""

    mean_eta: float = serializable_field(default=1.0)
    b: float = serializable_field(default=math.nan)
    confidence: float = serializable_field(default=math.inf)
    points: int = serializable_field(default=0)
    degenerate: bool = serializable_field(default=True)

    def __post_init__(self):
        if not self.confidence >= 0:
            raise ValueError(f"confidence must be non-negative, got {self.confidence = }")


def _quadratic(q2: np.ndarray, b: float) -> np.ndarray:
    return b * q2


def fit_quadratic_coefficient(
    q2: np.ndarray,
    dp: np.ndarray,
) -> tuple[float, float, bool]:
    """least-squares `b` in `dp = b q2` (no intercept): `(b, standard error, degenerate)`

    degenerate when fewer than two points or every `q2` is (close to) zero;
    then `b` is `nan` and the error `inf`
    """
    q2 = np.asarray(q2, dtype=float)
    dp = np.asarray(dp, dtype=float)
    if q2.shape != dp.shape:
        raise ValueError(f"shape mismatch: {q2.shape = } {dp.shape = }")
    if len(q2) < 2 or float(np.max(np.abs(q2))) <= FIT_DEGENERATE_Q2:
        return math.nan, math.inf, True
    popt, pcov = curve_fit(_quadratic, q2, dp, p0=[0.0])
    stderr: float = float(np.sqrt(pcov[0, 0])) if np.isfinite(pcov[0, 0]) else math.inf
    return float(popt[0]), stderr, False


def fit_taylor_B(
    n: int,
    mean_eta_grid: Sequence[float],
    draws_per_point: int = 30,
    seed: int = DEFAULT_SEED,
    q_max: float = 0.05,
    candidates: int = 5,
    threads: int = 1,
) -> list[FitResult]:
    """second-order Taylor coefficient `B` of `p_max` in `Q^2`, one fit per `<eta>`

    each draw picks `Q` uniformly below `q_max` (capped so the sets stay feasible)
    and keeps the lowest-`|W|` of `candidates` sets, suppressing the third-order term
    """
    validate_rank(n, min_rank=2, max_rank=10)
    if draws_per_point < 2:
        raise ValueError(f"need at least two draws per point, got {draws_per_point = }")
    cfg = WalkConfig(n=n)
    logger = get_logger()
    results: list[FitResult] = []
    for i, mean in enumerate(mean_eta_grid):
        rng: np.random.Generator = sample_rng(seed, i)
        q_hi: float = min(q_max, 0.5 * max_rms_deviation(mean))
        qs: np.ndarray = rng.uniform(0.0, q_hi, size=draws_per_point)
        etas: np.ndarray = np.stack(
            [sample_low_w_etas(n, mean, float(q), candidates, rng) for q in qs]
        )
        p_max, _, p_ref, _ = _pmax_directional(cfg, etas, np.array([mean]), threads)
        _, q, _ = loss_statistics_batch(etas)
        b, stderr, degenerate = fit_quadratic_coefficient(q**2, p_max - p_ref[0])
        results.append(
            FitResult(
                mean_eta=float(mean),
                b=b,
                confidence=stderr,
                points=draws_per_point,
                degenerate=degenerate,
            )
        )
        if degenerate:
            logger.progress(f"degenerate fit at <eta> = {mean}", lvl=-5)
        logger.progress(results[-1].serialize(), lvl=20)
    return results


def b_discontinuities(fits: Sequence[FitResult]) -> CsvSeries:
    """neighbouring grid intervals ordered by the size of the jump in `B`, largest first

    degenerate fits are skipped. descriptive only: no threshold decides what counts as a jump
    """
    valid: list[FitResult] = sorted(
        (f for f in fits if not f.degenerate), key=lambda f: f.mean_eta
    )
    rows: list[dict] = [
        dict(
            mean_eta_lo=lo.mean_eta,
            mean_eta_hi=hi.mean_eta,
            delta_b=hi.b - lo.b,
        )
        for lo, hi in zip(valid[:-1], valid[1:])
    ]
    rows.sort(key=lambda r: (-abs(r["delta_b"]), r["mean_eta_lo"]))
    return CsvSeries.from_records(rows, columns=["mean_eta_lo", "mean_eta_hi", "delta_b"])


def fits_table(fits: Sequence[FitResult]) -> CsvSeries:
    return CsvSeries.from_records(
        [f.serialize() for f in fits],
        columns=["mean_eta", "b", "confidence", "points", "degenerate"],
    )


# improvement over uniform loss
# ==================================================

IMPROVEMENT_COLUMNS: list[str] = [
    "mean_eta",
    "q",
    "w",
    "p_max",
    "p_max_uniform",
    "improvement_pct",
    "feasible",
]


def default_mean_grid(q_target: float, points: int = 12) -> np.ndarray:
    """evenly spaced `<eta>` over the range where RMS deviation `q_target` is possible"""
    if q_target >= 0.5:
        raise InfeasibleParameterError(f"no mean transmission allows {q_target = }")
    half_width: float = math.sqrt(0.25 - q_target**2)
    return np.linspace(0.5 - half_width, 0.5 + half_width, points + 2)[1:-1]


def directional_improvement_scan(
    n: int,
    q_target: float,
    draws: int = 20,
    seed: int = DEFAULT_SEED,
    mean_eta_grid: Sequence[float] | None = None,
    threads: int = 1,
) -> CsvSeries:
    """relative improvement `[p_max({eta}) - p_max(<eta>)] / p_max(<eta>)` in percent

    `draws` random sets at `(<eta>, q_target)` per grid point. a point where no such
    set can be drawn gives one row with `feasible = false`
    """
    validate_rank(n, min_rank=2, max_rank=10)
    cfg = WalkConfig(n=n)
    logger = get_logger()
    grid: np.ndarray = (
        default_mean_grid(q_target) if mean_eta_grid is None else np.asarray(mean_eta_grid)
    )
    rows: list[dict] = []
    for i, mean in enumerate(grid):
        try:
            etas: np.ndarray = sample_constrained_etas(
                n, float(mean), q_target, draws, sample_rng(seed, i)
            )
        except InfeasibleParameterError as e:
            logger.progress(f"skipping infeasible point: {e}", lvl=-5)
            rows.append(
                dict(
                    mean_eta=float(mean),
                    q=q_target,
                    w=math.nan,
                    p_max=math.nan,
                    p_max_uniform=math.nan,
                    improvement_pct=math.nan,
                    feasible=False,
                )
            )
            continue
        p_max, _, p_ref, _ = _pmax_directional(cfg, etas, np.array([float(mean)]), threads)
        mean_s, q, w = loss_statistics_batch(etas)
        for k in range(draws):
            rows.append(
                dict(
                    mean_eta=float(mean_s[k]),
                    q=float(q[k]),
                    w=float(w[k]),
                    p_max=float(p_max[k]),
                    p_max_uniform=float(p_ref[0]),
                    improvement_pct=100.0 * (p_max[k] - p_ref[0]) / p_ref[0],
                    feasible=True,
                )
            )
    return CsvSeries.from_records(rows, columns=IMPROVEMENT_COLUMNS)


def attenuation_scan(
    n: int,
    eta_max: float,
    draws: int = 200,
    seed: int = DEFAULT_SEED,
    spread_max: float = 0.6,
    threads: int = 1,
) -> CsvSeries:
    """`[p_max({eta}) - p_max(eta_max)] / p_max(eta_max)` in percent, for sets made by
    attenuating a uniform `eta_max` (drawn within `+-0.001`) by up to `spread_max`
    """
    validate_rank(n, min_rank=2, max_rank=10)
    if not (0.0 < eta_max <= 1.0):
        raise InfeasibleParameterError(f"eta_max must be in (0, 1], got {eta_max = }")
    cfg = WalkConfig(n=n)
    rng: np.random.Generator = sample_rng(seed, 0)
    tops: np.ndarray = np.minimum(rng.uniform(eta_max - 0.001, eta_max + 0.001, size=draws), 1.0)
    spreads: np.ndarray = rng.uniform(0.0, spread_max, size=draws)
    etas: np.ndarray = np.stack(
        [attenuated_etas(n, float(top), float(s), rng) for top, s in zip(tops, spreads)]
    )

    p_max, _, p_ref, _ = _pmax_directional(cfg, etas, tops, threads)

    mean, q, w = loss_statistics_batch(etas)
    return CsvSeries.from_columns(
        eta_max=tops,
        mean_eta=mean,
        q=q,
        w=w,
        p_max=p_max,
        p_max_uniform=p_ref,
        rel_diff_pct=100.0 * (p_max - p_ref) / p_ref,
    )


def general_bound_check(
    n: int,
    draws: int = 1000,
    seed: int = DEFAULT_SEED,
    eta_low: float = 0.0,
    threads: int = 1,
) -> CsvSeries:
    """check `p_max({eta}) >= p_max(<eta>) + 2^(-n) Q^2` on sets with `eta_d` uniform in `[eta_low, 1]`

    `p_max(<eta>)` is simulated. the comparison allows `TOL_ALGEBRAIC` of rounding:
    in the strong-loss regime the maximum sits at `t = 1`, where the bound is an
    equality. violations go to the `violations` log stream
    """
    validate_rank(n, min_rank=2, max_rank=10)
    cfg = WalkConfig(n=n)
    logger = get_logger()
    etas: np.ndarray = sample_uniform_etas(n, draws, sample_rng(seed, 0), low=eta_low)
    mean, q, w = loss_statistics_batch(etas)

    with TimerContext() as timer:
        p_max, t_argmax, p_ref, _ = _pmax_directional(cfg, etas, mean, threads)
    logger.timing(f"general bound check, {n = }, {draws = }: {timer.elapsed_time:.2f}s", lvl=15)

    bounds: np.ndarray = np.array(
        [
            empirical_lower_bound(float(m), float(qq), n, p_max_uniform=float(p)).bound
            for m, qq, p in zip(mean, q, p_ref)
        ]
    )
    holds: np.ndarray = p_max >= bounds - TOL_ALGEBRAIC * np.maximum(bounds, 1.0)
    for k in np.flatnonzero(~holds):
        logger.violations(
            dict(mean_eta=mean[k], q=q[k], w=w[k], p_max=p_max[k], bound=bounds[k]),
            lvl=-10,
        )
    logger.summary(
        dict(
            n=n,
            draws=draws,
            fraction_holding=float(np.mean(holds)),
            t_argmax=StatCounter(t_argmax.tolist()).summary(),
        ),
        lvl=5,
    )
    return CsvSeries.from_columns(
        mean_eta=mean,
        q=q,
        w=w,
        p_max=p_max,
        p_max_uniform=p_ref,
        bound=bounds,
        holds=holds,
    )


# registry
# ==================================================


@register_method(EXPERIMENTS, "uniform-sweep")
def _run_uniform_sweep(spec: ExperimentSpec) -> CsvSeries:
    return sweep_uniform_loss(spec.ns, spec.epsilons, spec.seed)


@register_method(EXPERIMENTS, "fit-taylor")
def _run_fit_taylor(spec: ExperimentSpec) -> CsvSeries:
    require_at_least(spec, "draws", MIN_FIT_DRAWS)
    grid: Sequence[float] = spec.mean_eta_grid or list(np.round(np.linspace(0.1, 0.95, 18), 6))
    logger = get_logger()

    def build(n: int) -> CsvSeries:
        fits: list[FitResult] = fit_taylor_B(
            n,
            grid,
            spec.draws,
            spec.seed,
            q_max=spec.q_max,
            candidates=spec.candidates,
            threads=spec.threads,
        )
        jumps: CsvSeries = b_discontinuities(fits)
        logger.summary(
            dict(n=n, b_jumps=jumps.frame.head(B_JUMPS_REPORTED).to_dict("records")),
            lvl=5,
        )
        return fits_table(fits)

    return for_each_rank(spec, build)


@register_method(EXPERIMENTS, "directional-improvement")
def _run_directional_improvement(spec: ExperimentSpec) -> CsvSeries:
    return for_each_rank(
        spec,
        lambda n: directional_improvement_scan(
            n,
            spec.q_target,
            spec.draws,
            spec.seed,
            mean_eta_grid=spec.mean_eta_grid or None,
            threads=spec.threads,
        ),
    )


@register_method(EXPERIMENTS, "attenuation")
def _run_attenuation(spec: ExperimentSpec) -> CsvSeries:
    return for_each_rank(
        spec,
        lambda n: attenuation_scan(
            n, spec.eta_max, spec.draws, spec.seed, spec.spread_max, spec.threads
        ),
    )


@register_method(EXPERIMENTS, "general-bound")
def _run_general_bound(spec: ExperimentSpec) -> CsvSeries:
    return for_each_rank(
        spec,
        lambda n: general_bound_check(n, spec.draws, spec.seed, spec.eta_low, spec.threads),
    )
