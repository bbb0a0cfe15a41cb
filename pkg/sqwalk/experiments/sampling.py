"""random transmission sets for the direction-dependent-loss studies

fixed `(<eta>, Q)` sets are made by drawing uniform candidates and affinely moving
their deviations onto the requested mean and RMS. candidates that leave `[0, 1]`
are rejected, in whole batches at a time
"""

import math

import numpy as np

from sqwalk.analytics import loss_statistics_batch
from sqwalk.util import InfeasibleParameterError, validate_rank, validate_transmission

# candidates drawn per rejection round, and the number of rounds before giving up
SAMPLING_BATCH: int = 256
SAMPLING_MAX_ROUNDS: int = 200


def max_rms_deviation(mean: float) -> float:
    """largest `Q` any set in `[0, 1]` can have at this mean (half the directions at 0, half at 1)"""
    return math.sqrt(mean * (1.0 - mean))


def sample_uniform_etas(
    n: int,
    draws: int,
    rng: np.random.Generator,
    low: float = 0.0,
    high: float = 1.0,
) -> np.ndarray:
    """`(draws, n)` transmissions, i.i.d. uniform on `[low, high]`"""
    validate_rank(n)
    low = validate_transmission(low, "low")
    high = validate_transmission(high, "high")
    if low > high:
        raise ValueError(f"empty range: {low = } > {high = }")
    return rng.uniform(low, high, size=(draws, n))


def constrain_etas(candidates: np.ndarray, mean: float, q: float) -> np.ndarray:
    """move each row onto mean `mean` and RMS deviation `q`

    rows with no spread cannot be rescaled to `q > 0` and come back as `nan`
    """
    centre: np.ndarray = candidates.mean(axis=-1, keepdims=True)
    delta: np.ndarray = candidates - centre
    rms: np.ndarray = np.sqrt(np.mean(delta**2, axis=-1, keepdims=True))
    if q == 0.0:
        return np.full(candidates.shape, float(mean))
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled: np.ndarray = mean + delta * (q / rms)
    scaled[np.broadcast_to(rms == 0.0, scaled.shape)] = np.nan
    return scaled


def feasible_rows(etas: np.ndarray) -> np.ndarray:
    """rows with every transmission inside `[0, 1]`"""
    return np.all((etas >= 0.0) & (etas <= 1.0), axis=-1)


def sample_constrained_etas(
    n: int,
    mean: float,
    q: float,
    draws: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """`(draws, n)` transmission sets with exactly mean `mean` and RMS deviation `q`

    raises `InfeasibleParameterError` when no set exists, or when rejection sampling
    has not found `draws` sets after `SAMPLING_MAX_ROUNDS` rounds
    """
    validate_rank(n)
    mean = validate_transmission(mean, "mean")
    if q < 0:
        raise ValueError(f"q must be non-negative, got {q = }")
    if q > max_rms_deviation(mean):
        raise InfeasibleParameterError(
            f"no transmissions in [0, 1] have {mean = } and {q = } (at most {max_rms_deviation(mean)})"
        )
    if q == 0.0:
        return np.full((draws, n), mean)

    accepted: list[np.ndarray] = []
    found: int = 0
    for _ in range(SAMPLING_MAX_ROUNDS):
        batch: np.ndarray = constrain_etas(
            rng.uniform(0.0, 1.0, size=(SAMPLING_BATCH, n)), mean, q
        )
        ok: np.ndarray = feasible_rows(batch)
        accepted.append(batch[ok])
        found += int(np.sum(ok))
        if found >= draws:
            return np.concatenate(accepted, axis=0)[:draws]

    raise InfeasibleParameterError(
        f"only {found} of {draws} transmission sets with {mean = }, {q = } found "
        f"in {SAMPLING_MAX_ROUNDS * SAMPLING_BATCH} candidates"
    )


def sample_low_w_etas(
    n: int,
    mean: float,
    q: float,
    candidates: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """of `candidates` sets at `(mean, q)`, the one with the smallest `|W|`"""
    if candidates < 1:
        raise ValueError(f"need at least one candidate, got {candidates = }")
    sets: np.ndarray = sample_constrained_etas(n, mean, q, candidates, rng)
    _, _, w = loss_statistics_batch(sets)
    return sets[int(np.argmin(np.abs(w)))]


def attenuated_etas(
    n: int,
    eta_max: float,
    spread: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """transmissions with maximum exactly `eta_max` and minimum `eta_max - spread`

    interior values are uniform draws mapped affinely onto that range
    """
    u: np.ndarray = rng.uniform(0.0, 1.0, size=n)
    width: float = float(np.max(u) - np.min(u))
    if width == 0.0:
        return np.full(n, eta_max)
    etas: np.ndarray = eta_max - spread * (np.max(u) - u) / width
    return np.clip(etas, 0.0, 1.0)
