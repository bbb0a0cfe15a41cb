"""loss and phase-error channels, noisy stepping, trajectories and Monte Carlo ensembles

a noisy step is `D S F C'`: marked coin, phase shifts, hypercube shift, then loss.
absent channels are the identity. loss only rescales amplitudes (the vacuum is
implicit in the norm deficit), phases multiply each `(d, x)` amplitude by `e^{i phi}`.

the ensemble engine evolves a whole batch of trajectories as one `(batch, 2^n, n)`
array. member `k` of an ensemble always draws from `sample_rng(master_seed, k)` and
batches have a fixed size, so results do not depend on how the work is split up
"""

import math
from dataclasses import dataclass
from typing import Literal, Sequence, Union

import numpy as np
import pandas as pd

from muutils.json_serialize import (
    SerializableDataclass,
    serializable_dataclass,
    serializable_field,
)
from sqwalk.runutils import ENSEMBLE_CHUNK, chunks, parallel_map, sample_rng
from sqwalk.state import WalkConfig, WalkState, uniform_initial_state
from sqwalk.util import (
    AmplitudeArray,
    PhaseArray,
    ProbSeries,
    validate_rank,
    validate_transmission,
    validate_transmissions,
)
from sqwalk.walk import CoinPair, marked_coin_array, shift_array

# pylint: disable=missing-class-docstring, too-many-arguments

PhaseRegime = Literal["fluctuating", "static"]
PhaseDistribution = Literal["gaussian", "uniform"]

PHASE_REGIMES: tuple[str, ...] = ("fluctuating", "static")
PHASE_DISTRIBUTIONS: tuple[str, ...] = ("gaussian", "uniform")


# loss
# ==================================================


@serializable_dataclass(frozen=True)
class UniformLoss(SerializableDataclass):
    """same transmission `eta` in every direction"""

    eta: float = serializable_field(default=1.0)

    def __post_init__(self):
        validate_transmission(self.eta)

    def factors(self, n: int) -> np.ndarray:
        return np.full(n, float(self.eta))


@serializable_dataclass(frozen=True)
class DirectionalLoss(SerializableDataclass):
    """transmission `etas[d]` for direction `d`, independent of position"""

    etas: tuple[float, ...] = serializable_field(
        default_factory=tuple,
        serialization_fn=list,
        loading_fn=lambda data: tuple(data["etas"]),
    )

    def __post_init__(self):
        object.__setattr__(self, "etas", validate_transmissions(tuple(self.etas)))

    def factors(self, n: int) -> np.ndarray:
        if len(self.etas) != n:
            raise ValueError(
                f"directional loss needs one transmission per direction: {len(self.etas) = }, {n = }"
            )
        return np.array(self.etas, dtype=float)


LossModel = Union[UniformLoss, DirectionalLoss]


def _loss_factors(loss: LossModel | None, n: int) -> np.ndarray | float | None:
    """scalar for uniform loss (keeps the `eta^t` factorization exact), per-direction array otherwise"""
    if loss is None:
        return None
    if isinstance(loss, UniformLoss):
        return float(loss.eta)
    return loss.factors(n)


def apply_loss(state: WalkState, loss: LossModel) -> WalkState:
    """multiply the amplitude at `(d, x)` by `eta` (uniform) or `eta_d` (directional)"""
    factors = _loss_factors(loss, state.n)
    return WalkState(state.amplitudes * factors)


# phases
# ==================================================


@serializable_dataclass(frozen=True)
class PhaseModel(SerializableDataclass):
    """i.i.d. phase errors on every `(d, x)`

    - `regime`: `"fluctuating"` draws a fresh field every step, `"static"` draws one field per run
    - `distribution`: `"gaussian"` (zero mean, standard deviation `sigma` in radians)
      or `"uniform"` on `[0, 2 pi)`
    """

    regime: str = serializable_field(default="static")
    distribution: str = serializable_field(default="gaussian")
    sigma: float = serializable_field(default=0.0)

    def __post_init__(self):
        if self.regime not in PHASE_REGIMES:
            raise ValueError(f"unknown phase regime {self.regime!r}, expected one of {PHASE_REGIMES}")
        if self.distribution not in PHASE_DISTRIBUTIONS:
            raise ValueError(
                f"unknown phase distribution {self.distribution!r}, expected one of {PHASE_DISTRIBUTIONS}"
            )
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValueError(f"sigma must be finite and non-negative, got {self.sigma = }")

    @classmethod
    def from_degrees(
        cls,
        regime: PhaseRegime,
        distribution: PhaseDistribution,
        dphi_deg: float = 0.0,
    ) -> "PhaseModel":
        """`dphi_deg` is the Gaussian standard deviation in degrees"""
        return cls(regime=regime, distribution=distribution, sigma=math.radians(dphi_deg))

    @property
    def is_static(self) -> bool:
        return self.regime == "static"

    @property
    def is_trivial(self) -> bool:
        """every draw is exactly zero"""
        return self.distribution == "gaussian" and self.sigma == 0.0

    def sample(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        """draw raw phases (radians, unwrapped) of the given shape"""
        if self.distribution == "uniform":
            return rng.uniform(0.0, 2.0 * np.pi, size=shape)
        if self.sigma == 0.0:
            return np.zeros(shape)
        return rng.normal(0.0, self.sigma, size=shape)


@dataclass(frozen=True, eq=False)
class PhaseField:
    """phase `phases[x, d]` (radians, not reduced mod 2 pi) for each `(d, x)`"""

    phases: PhaseArray

    def __post_init__(self):
        phases: np.ndarray = np.array(self.phases, dtype=float)
        if phases.ndim != 2 or phases.shape[0] != 2 ** phases.shape[1]:
            raise ValueError(f"phase field must have shape (2^n, n), got {phases.shape = }")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @property
    def n(self) -> int:
        return self.phases.shape[1]

    @classmethod
    def zeros(cls, n: int) -> "PhaseField":
        validate_rank(n)
        return cls(np.zeros((2**n, n)))


@dataclass(frozen=True)
class PhaseHistory:
    """phase fields for steps `1..t`. in the static regime every entry is the same field"""

    fields: tuple[PhaseField, ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if len({f.n for f in self.fields}) > 1:
            raise ValueError("all fields in a history must have the same rank")

    @classmethod
    def static(cls, field: PhaseField, t: int) -> "PhaseHistory":
        return cls(tuple(field for _ in range(t)))

    def __len__(self) -> int:
        return len(self.fields)

    def step(self, k: int) -> PhaseField:
        """field applied during step `k`, counting from 1"""
        if not (1 <= k <= len(self.fields)):
            raise IndexError(f"step {k} outside history of length {len(self.fields)}")
        return self.fields[k - 1]


def sample_phase_field(n: int, model: PhaseModel, rng: np.random.Generator) -> PhaseField:
    """`n 2^n` i.i.d. phases drawn from `model`"""
    validate_rank(n)
    return PhaseField(model.sample(rng, (2**n, n)))


def apply_phase_field(state: WalkState, field: PhaseField) -> WalkState:
    """multiply the amplitude at `(d, x)` by `e^{i phi_{d,x}}`"""
    if field.phases.shape != state.amplitudes.shape:
        raise ValueError(
            f"phase field shape {field.phases.shape} does not match state {state.amplitudes.shape}"
        )
    return WalkState(state.amplitudes * np.exp(1j * field.phases))


def _step_array(
    amps: AmplitudeArray,
    target: int,
    pair: CoinPair,
    loss_factors: np.ndarray | float | None,
    phase_factors: np.ndarray | None,
) -> AmplitudeArray:
    amps = marked_coin_array(amps, target, pair)
    if phase_factors is not None:
        amps = amps * phase_factors
    amps = shift_array(amps)
    if loss_factors is not None:
        amps = amps * loss_factors
    return amps


def step_noisy(
    state: WalkState,
    cfg: WalkConfig,
    pair: CoinPair | None = None,
    loss: LossModel | None = None,
    field: PhaseField | None = None,
) -> WalkState:
    """one step `D S F C'`"""
    if pair is None:
        pair = CoinPair.standard(cfg.n)
    phase_factors: np.ndarray | None = None
    if field is not None:
        if field.n != cfg.n:
            raise ValueError(f"phase field rank {field.n} does not match config rank {cfg.n}")
        phase_factors = np.exp(1j * field.phases)
    return WalkState(
        _step_array(
            state.amplitudes, cfg.target, pair, _loss_factors(loss, cfg.n), phase_factors
        )
    )


def evolve_with_history(
    state: WalkState,
    cfg: WalkConfig,
    history: PhaseHistory,
    pair: CoinPair | None = None,
    loss: LossModel | None = None,
) -> WalkState:
    """apply `len(history)` noisy steps, step `k` using `history.step(k)`"""
    for k in range(1, len(history) + 1):
        state = step_noisy(state, cfg, pair, loss=loss, field=history.step(k))
    return state


# batched trajectories
# ==================================================


def _evolve_batch(
    cfg: WalkConfig,
    pair: CoinPair,
    loss_factors: np.ndarray | float | None,
    phase_model: PhaseModel | None,
    rngs: Sequence[np.random.Generator],
    batch: int,
    t_max: int,
) -> tuple[np.ndarray, np.ndarray]:
    """target probability and norm^2 series, shape `(batch, t_max + 1)`, from the uniform state

    `loss_factors` is a scalar, an `(n,)` array, or a `(batch, n)` array for per-member
    directional loss. `rngs` must hold one generator per member when `phase_model` is given
    """
    n: int = cfg.n
    shape: tuple[int, int] = (2**n, n)
    amps: np.ndarray = np.broadcast_to(
        uniform_initial_state(n).amplitudes, (batch, *shape)
    ).copy()

    if isinstance(loss_factors, np.ndarray) and loss_factors.ndim == 2:
        loss_factors = loss_factors[:, None, :]

    static_factors: np.ndarray | None = None
    if phase_model is not None:
        if len(rngs) != batch:
            raise ValueError(f"need one generator per member: {len(rngs) = }, {batch = }")
        if phase_model.is_static:
            static_factors = np.exp(
                1j * np.stack([phase_model.sample(rng, shape) for rng in rngs])
            )

    probs: np.ndarray = np.empty((batch, t_max + 1))
    norms: np.ndarray = np.empty((batch, t_max + 1))
    probs[:, 0] = np.sum(np.abs(amps[:, cfg.target, :]) ** 2, axis=-1)
    norms[:, 0] = np.sum(np.abs(amps) ** 2, axis=(-2, -1))

    for t in range(1, t_max + 1):
        phase_factors: np.ndarray | None = static_factors
        if phase_model is not None and not phase_model.is_static:
            phase_factors = np.exp(
                1j * np.stack([phase_model.sample(rng, shape) for rng in rngs])
            )
        amps = _step_array(amps, cfg.target, pair, loss_factors, phase_factors)
        probs[:, t] = np.sum(np.abs(amps[:, cfg.target, :]) ** 2, axis=-1)
        norms[:, t] = np.sum(np.abs(amps) ** 2, axis=(-2, -1))

    return probs, norms


def run_trajectory(
    cfg: WalkConfig,
    pair: CoinPair | None = None,
    loss: LossModel | None = None,
    phase_model: PhaseModel | None = None,
    t_max: int = 0,
    rng: np.random.Generator | None = None,
) -> ProbSeries:
    """target probability `p(t)`, `t = 0..t_max`, of one run from the uniform state

    fluctuating phases draw a fresh field every step; static phases draw a single
    field before the first step and reuse it
    """
    probs, _ = run_trajectory_with_norm(cfg, pair, loss, phase_model, t_max, rng)
    return probs


def run_trajectory_with_norm(
    cfg: WalkConfig,
    pair: CoinPair | None = None,
    loss: LossModel | None = None,
    phase_model: PhaseModel | None = None,
    t_max: int = 0,
    rng: np.random.Generator | None = None,
) -> tuple[ProbSeries, ProbSeries]:
    """`run_trajectory`, also returning the norm^2 series"""
    if t_max < 0:
        raise ValueError(f"t_max must be non-negative, got {t_max = }")
    if pair is None:
        pair = CoinPair.standard(cfg.n)
    if phase_model is not None and rng is None:
        raise ValueError("a generator is required when phase errors are simulated")
    probs, norms = _evolve_batch(
        cfg,
        pair,
        _loss_factors(loss, cfg.n),
        phase_model,
        [rng] if rng is not None else [],
        1,
        t_max,
    )
    return probs[0], norms[0]


@dataclass(frozen=True, eq=False)
class AveragedSeries:
    """ensemble-mean target probability with its standard error, per step"""

    t: np.ndarray
    mean_p: np.ndarray
    stderr: np.ndarray
    samples: int

    def __post_init__(self):
        if not (len(self.t) == len(self.mean_p) == len(self.stderr)):
            raise ValueError("t, mean_p and stderr must have the same length")
        if np.any(self.stderr < 0):
            raise ValueError("standard errors must be non-negative")

    @classmethod
    def from_samples(cls, probs: np.ndarray) -> "AveragedSeries":
        """aggregate an array of shape `(samples, t_max + 1)`, rows in sample order"""
        samples: int = probs.shape[0]
        stderr: np.ndarray = (
            np.std(probs, axis=0, ddof=1) / math.sqrt(samples)
            if samples > 1
            else np.zeros(probs.shape[1])
        )
        return cls(
            t=np.arange(probs.shape[1]),
            mean_p=np.mean(probs, axis=0),
            stderr=stderr,
            samples=samples,
        )

    def window_mean(self, start: int, end: int) -> float:
        """time average of `mean_p` over `start <= t <= end`"""
        if not (0 <= start <= end < len(self.t)):
            raise ValueError(f"window [{start}, {end}] outside series of length {len(self.t)}")
        return float(np.mean(self.mean_p[start : end + 1]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "mean_p": self.mean_p, "stderr": self.stderr})


def _ensemble_chunk(
    args: tuple[WalkConfig, CoinPair, LossModel | None, PhaseModel, int, int, list[int]]
) -> np.ndarray:
    cfg, pair, loss, phase_model, t_max, master_seed, members = args
    probs, _ = _evolve_batch(
        cfg,
        pair,
        _loss_factors(loss, cfg.n),
        phase_model,
        [sample_rng(master_seed, k) for k in members],
        len(members),
        t_max,
    )
    return probs


def run_ensemble(
    cfg: WalkConfig,
    pair: CoinPair | None = None,
    loss: LossModel | None = None,
    phase_model: PhaseModel | None = None,
    t_max: int = 0,
    samples: int = 1,
    master_seed: int = 0,
    threads: int = 1,
) -> AveragedSeries:
    """mean and standard error of `samples` independent trajectories

    member `k` uses `sample_rng(master_seed, k)`, so member `k` of any ensemble equals
    `run_trajectory(..., rng=sample_rng(master_seed, k))`
    """
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples = }")
    if t_max < 0:
        raise ValueError(f"t_max must be non-negative, got {t_max = }")
    if pair is None:
        pair = CoinPair.standard(cfg.n)

    if phase_model is None or phase_model.is_trivial:
        # nothing random: every member is the same trajectory
        single: np.ndarray = run_trajectory(cfg, pair, loss, None, t_max)
        return AveragedSeries(
            t=np.arange(t_max + 1),
            mean_p=single,
            stderr=np.zeros(t_max + 1),
            samples=samples,
        )

    tasks = [
        (cfg, pair, loss, phase_model, t_max, master_seed, members)
        for members in chunks(range(samples), ENSEMBLE_CHUNK)
    ]
    results: list[np.ndarray] = parallel_map(_ensemble_chunk, tasks, threads)
    return AveragedSeries.from_samples(np.concatenate(results, axis=0))


# maximum success probability
# ==================================================


def _pmax_chunk(
    args: tuple[WalkConfig, CoinPair, np.ndarray, np.ndarray, int]
) -> tuple[np.ndarray, np.ndarray]:
    cfg, pair, etas, horizons, t_min = args
    t_max: int = int(np.max(horizons))
    probs, _ = _evolve_batch(cfg, pair, etas, None, [], etas.shape[0], t_max)
    t_axis: np.ndarray = np.arange(t_max + 1)[None, :]
    outside: np.ndarray = (t_axis < t_min) | (t_axis > horizons[:, None])
    probs = np.where(outside, -np.inf, probs)
    t_argmax: np.ndarray = np.argmax(probs, axis=1)
    return probs[np.arange(probs.shape[0]), t_argmax], t_argmax


def simulate_pmax_batch(
    cfg: WalkConfig,
    etas: np.ndarray,
    horizons: np.ndarray,
    t_min: int = 1,
    pair: CoinPair | None = None,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """maximum target probability and its step for each row of directional transmissions

    row `b` of `etas` (shape `(batch, n)`) is searched over `t_min <= t <= horizons[b]`.
    returns `(p_max, t_argmax)`, each of shape `(batch,)`; ties go to the earliest step
    """
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    horizons = np.broadcast_to(np.asarray(horizons, dtype=int), (etas.shape[0],))
    if etas.shape[1] != cfg.n:
        raise ValueError(f"need {cfg.n} transmissions per row, got {etas.shape = }")
    if np.any((etas < 0) | (etas > 1)):
        raise ValueError("transmissions must be in [0, 1]")
    if np.any(horizons < t_min):
        raise ValueError(f"every horizon must be at least {t_min = }")
    if pair is None:
        pair = CoinPair.standard(cfg.n)

    tasks = [
        (cfg, pair, etas[rows], horizons[rows], t_min)
        for rows in chunks(range(etas.shape[0]), ENSEMBLE_CHUNK)
    ]
    results = parallel_map(_pmax_chunk, tasks, threads)
    return (
        np.concatenate([r[0] for r in results]),
        np.concatenate([r[1] for r in results]),
    )


def simulate_pmax(
    cfg: WalkConfig,
    loss: LossModel | None,
    t_min: int,
    t_max: int,
    pair: CoinPair | None = None,
) -> tuple[float, int]:
    """`(p_max, t_argmax)` of the target probability over `t_min <= t <= t_max`"""
    if not (0 <= t_min <= t_max):
        raise ValueError(f"invalid horizon [{t_min}, {t_max}]")
    probs: np.ndarray = run_trajectory(cfg, pair, loss, None, t_max)
    t_argmax: int = t_min + int(np.argmax(probs[t_min:]))
    return float(probs[t_argmax]), t_argmax
