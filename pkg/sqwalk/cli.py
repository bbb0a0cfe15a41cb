"""command line front end

```
sqwalk ideal --n 6 --steps 30 --out run.csv
sqwalk uniform-loss --n 8 --eta 0.99 --steps 60
sqwalk directional-loss --n 3 --etas 0.9,0.95,1.0 --steps 20
sqwalk phase-noise --n 6 --regime static --dist gaussian --dphi-deg 6 --samples 1000 --steps 600 --seed 42
sqwalk analytics --n 10 --eta 0.99
sqwalk oracle-check --n 3 --steps 5 --fields 20
sqwalk experiment --spec fit_taylor.json
```

CSV goes to `--out` (stdout by default); diagnostics, including a one-line
`p_max`/`t_argmax` summary, go to stderr. `--log` also writes them as JSON lines.
exit codes: `0` success, `1` infeasible physical parameters, `2` argument errors
"""

import sys
from typing import Any, Callable, Sequence

import fire  # type: ignore[import]
import numpy as np

from sqwalk.analytics import p_uniform_approx, uniform_loss_prediction, x_approx
from sqwalk.csvio import CsvSeries, write_csv, write_key_values
from sqwalk.experiments import ExperimentSpec, run_experiment
from sqwalk.logger import RunLogger, configure_logger, get_logger
from sqwalk.noise import (
    DirectionalLoss,
    PhaseHistory,
    PhaseModel,
    UniformLoss,
    run_ensemble,
    run_trajectory,
    run_trajectory_with_norm,
    sample_phase_field,
    step_noisy,
)
from sqwalk.pathsum import pathsum_probability
from sqwalk.runutils import DEFAULT_SEED, sample_rng
from sqwalk.state import WalkConfig, uniform_initial_state, vertex_probability
from sqwalk.util import TOL_ACCUMULATED, InfeasibleParameterError
from sqwalk.walk import CoinPair, ideal_series

# pylint: disable=too-many-arguments, redefined-builtin

EXIT_OK: int = 0
EXIT_INFEASIBLE: int = 1
EXIT_USAGE: int = 2


def _setup_logger(log: str | None) -> RunLogger:
    if log is not None:
        return configure_logger(log_path=log)
    return get_logger()


def parse_etas(etas: Any) -> tuple[float, ...]:
    """`--etas` arrives as `"0.9,0.95,1.0"`, or already split into a tuple by the argument parser"""
    if isinstance(etas, str):
        return tuple(float(e) for e in etas.split(",") if e.strip())
    if isinstance(etas, (int, float)):
        return (float(etas),)
    return tuple(float(e) for e in etas)


def _summarize(logger: RunLogger, series: np.ndarray) -> None:
    t_argmax: int = int(np.argmax(series))
    logger.summary(dict(p_max=float(series[t_argmax]), t_argmax=t_argmax), lvl=0)


def _finish(logger: RunLogger, table: CsvSeries, out: str | None, p: np.ndarray | None) -> None:
    write_csv(table, out)
    if p is not None and len(p) > 0:
        _summarize(logger, p)
    logger.flush_all()


def ideal(n: int, steps: int, target: int = 0, out: str | None = None, log: str | None = None):
    """target probability of the ideal search: CSV `(t, p)`"""
    logger = _setup_logger(log)
    p: np.ndarray = ideal_series(WalkConfig(n=n, target=target), steps)
    _finish(logger, CsvSeries.from_columns(t=np.arange(steps + 1), p=p), out, p)


def uniform_loss(
    n: int,
    eta: float,
    steps: int,
    target: int = 0,
    theory: bool = False,
    out: str | None = None,
    log: str | None = None,
):
    """target probability under uniform transmission `eta`: CSV `(t, p)`

    `--theory` appends `p_leading`, the leading-order series `p_uniform_approx`
    """
    logger = _setup_logger(log)
    loss = UniformLoss(eta=float(eta))
    p: np.ndarray = run_trajectory(WalkConfig(n=n, target=target), loss=loss, t_max=steps)
    columns: dict[str, np.ndarray] = dict(t=np.arange(steps + 1), p=p)
    if theory:
        columns["p_leading"] = np.array(
            [p_uniform_approx(float(eta), n, t) for t in range(steps + 1)]
        )
    _finish(logger, CsvSeries.from_columns(**columns), out, p)


def directional_loss(
    n: int,
    etas: Any,
    steps: int,
    target: int = 0,
    out: str | None = None,
    log: str | None = None,
):
    """target probability and norm^2 under per-direction transmissions: CSV `(t, p, norm_sq)`"""
    logger = _setup_logger(log)
    loss = DirectionalLoss(etas=parse_etas(etas))
    p, norm_sq = run_trajectory_with_norm(
        WalkConfig(n=n, target=target), loss=loss, t_max=steps
    )
    _finish(
        logger,
        CsvSeries.from_columns(t=np.arange(steps + 1), p=p, norm_sq=norm_sq),
        out,
        p,
    )


def phase_noise(
    n: int,
    regime: str = "static",
    dist: str = "gaussian",
    dphi_deg: float = 0.0,
    samples: int = 1000,
    steps: int = 600,
    seed: int = DEFAULT_SEED,
    target: int = 0,
    threads: int = 1,
    out: str | None = None,
    log: str | None = None,
):
    """ensemble-mean target probability under phase errors: CSV `(t, mean_p, stderr)`

    `dphi_deg` is the Gaussian standard deviation in degrees
    """
    logger = _setup_logger(log)
    series = run_ensemble(
        WalkConfig(n=n, target=target),
        phase_model=PhaseModel.from_degrees(regime, dist, float(dphi_deg)),
        t_max=steps,
        samples=samples,
        master_seed=seed,
        threads=threads,
    )
    _finish(logger, CsvSeries(series.to_frame()), out, series.mean_p)


def analytics(n: int, eta: float, out: str | None = None, log: str | None = None):
    """leading-order predictions for uniform loss, as `key=value` lines"""
    logger = _setup_logger(log)
    pred = uniform_loss_prediction(float(eta), n)
    write_key_values(
        dict(
            n=pred.n,
            eta=pred.eta,
            x=pred.x,
            epsilon=pred.epsilon,
            x_approx=x_approx(pred.epsilon, n),
            t_m=pred.t_m,
            p_max_leading=pred.p_max_leading,
            omega=pred.omega,
        ),
        out,
    )
    logger.summary(dict(p_max=pred.p_max_leading, t_argmax=pred.t_m), lvl=0)
    logger.flush_all()


def oracle_check(
    n: int = 3,
    steps: int = 5,
    fields: int = 20,
    seed: int = DEFAULT_SEED,
    target: int = 0,
    out: str | None = None,
    log: str | None = None,
):
    """path sum against matrix evolution on random static phase fields, for every `t <= steps`:
    CSV `(case, p_matrix, p_pathsum, abs_diff)`
    """
    logger = _setup_logger(log)
    cfg = WalkConfig(n=n, target=target)
    pair = CoinPair.standard(n)
    model = PhaseModel(regime="static", distribution="uniform")
    rows: list[dict] = []
    for k in range(fields):
        field = sample_phase_field(n, model, sample_rng(seed, k))
        history = PhaseHistory.static(field, steps)
        state = uniform_initial_state(n)
        for t in range(steps + 1):
            p_matrix: float = vertex_probability(state, target)
            p_pathsum: float = pathsum_probability(cfg, pair, history, t=t).total
            rows.append(
                dict(
                    case=f"field{k}_t{t}",
                    p_matrix=p_matrix,
                    p_pathsum=p_pathsum,
                    abs_diff=abs(p_matrix - p_pathsum),
                )
            )
            state = step_noisy(state, cfg, pair, field=field)

    table = CsvSeries.from_records(rows, columns=["case", "p_matrix", "p_pathsum", "abs_diff"])
    write_csv(table, out)
    worst: float = max((r["abs_diff"] for r in rows), default=0.0)
    if worst > TOL_ACCUMULATED:
        logger.violations(dict(max_abs_diff=worst), lvl=-10)
    logger.summary(dict(cases=len(rows), max_abs_diff=worst), lvl=0)
    logger.flush_all()


def experiment(
    spec: str,
    out: str | None = None,
    threads: int | None = None,
    log: str | None = None,
):
    """run a named experiment from a JSON spec file. `--out` overrides the spec's `out`"""
    logger = _setup_logger(log)
    exp_spec: ExperimentSpec = ExperimentSpec.from_file(spec)
    table: CsvSeries = run_experiment(exp_spec, threads=threads)
    write_csv(table, out if out is not None else exp_spec.out)
    logger.summary(dict(experiment=exp_spec.name, rows=len(table)), lvl=0)
    logger.flush_all()


COMMANDS: dict[str, Callable] = {
    "ideal": ideal,
    "uniform-loss": uniform_loss,
    "directional-loss": directional_loss,
    "phase-noise": phase_noise,
    "analytics": analytics,
    "oracle-check": oracle_check,
    "experiment": experiment,
}


def main(argv: Sequence[str] | None = None) -> int:
    """run one subcommand and return its exit code"""
    args: list[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        fire.Fire(COMMANDS, command=args, name="sqwalk")
    except fire.core.FireExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE
    except InfeasibleParameterError as e:
        get_logger().log(f"infeasible parameters: {e}", lvl=-10)
        return EXIT_INFEASIBLE
    except (ValueError, TypeError, KeyError, IndexError) as e:
        get_logger().log(f"invalid arguments: {e}", lvl=-10)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
