"""closed-form predictions for lossy search

- rescaled loss variable `x = -ln(eta) sqrt(2^(n-1))` and `epsilon = -log2(1 - eta)`
- optimal measurement time `t_m` and the leading-order maximum success probability
- statistics of direction-dependent transmissions and lower bounds built on them

only leading-order terms are computed; the `O(1/n)` corrections are not modeled
"""

import math
from typing import Sequence

import numpy as np

from muutils.json_serialize import (
    SerializableDataclass,
    serializable_dataclass,
    serializable_field,
)
from sqwalk.util import (
    InfeasibleParameterError,
    validate_rank,
    validate_transmission,
    validate_transmissions,
)

# pylint: disable=missing-class-docstring

BoundSource = str  # "simulation" or "leading"


def acot(x: float) -> float:
    """inverse cotangent with range `(0, pi/2]` for `x >= 0`; `acot(inf) = 0`"""
    return math.atan2(1.0, x)


def _half_period(n: int) -> float:
    """`sqrt(2^(n-1))`, the inverse of the leading-order search frequency"""
    return math.sqrt(2.0 ** (n - 1))


def omega_leading(n: int) -> float:
    """leading-order search frequency `1/sqrt(2^(n-1))`"""
    validate_rank(n)
    return 1.0 / _half_period(n)


def x_parameter(eta: float, n: int) -> tuple[float, float]:
    """`(x, epsilon)` for transmission `eta` on rank `n`

    `x = -ln(eta) sqrt(2^(n-1))` and `epsilon = -log2(1 - eta)`, with `epsilon = inf` at `eta = 1`.
    `eta = 0` has no finite `x` and raises `InfeasibleParameterError`
    """
    validate_rank(n)
    eta = validate_transmission(eta)
    if eta == 0.0:
        raise InfeasibleParameterError(f"x diverges for zero transmission: {eta = }")
    x: float = abs(math.log(eta)) * _half_period(n)
    epsilon: float = math.inf if eta == 1.0 else -math.log2(1.0 - eta)
    return x, epsilon


def x_approx(epsilon: float, n: int) -> float:
    """`2^(-epsilon + n/2 - 1/2)`, first order in `2^(-epsilon)`"""
    validate_rank(n)
    if epsilon == math.inf:
        return 0.0
    return 2.0 ** (-epsilon + n / 2.0 - 0.5)


def eta_from_epsilon(epsilon: float) -> float:
    """inverse of `epsilon = -log2(1 - eta)`"""
    if epsilon < 0:
        raise InfeasibleParameterError(f"epsilon must be non-negative, got {epsilon = }")
    return 1.0 - 2.0 ** (-epsilon)


def eta_from_x(x: float, n: int) -> float:
    """inverse of `x = -ln(eta) sqrt(2^(n-1))`"""
    validate_rank(n)
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x = }")
    return math.exp(-x / _half_period(n))


def optimal_time_from_x(x: float, n: int) -> int:
    """`t_m = round(sqrt(2^(n-1)) acot(x))`, ties rounding up"""
    validate_rank(n)
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x = }")
    return int(math.floor(_half_period(n) * acot(x) + 0.5))


def optimal_time(eta: float, n: int) -> int:
    """step count maximising the leading-order success probability under uniform loss `eta`"""
    x, _ = x_parameter(eta, n)
    return optimal_time_from_x(x, n)


def pmax_leading(x: float) -> float:
    """`p_max(x) = exp(-2 x acot(x)) / (2 (1 + x^2))`; `1/2` at `x = 0`, `0` at `x = inf`"""
    if math.isnan(x) or x < 0:
        raise ValueError(f"x must be non-negative, got {x = }")
    if math.isinf(x):
        return 0.0
    return 0.5 * math.exp(-2.0 * x * acot(x)) / (1.0 + x * x)


def p_uniform_approx(eta: float, n: int, t: int) -> float:
    """leading-order lossy time series `eta^(2t) [sin^2(w t)/2 + 2^(-n) cos^2(w t)]`"""
    eta = validate_transmission(eta)
    omega: float = omega_leading(n)
    return eta ** (2 * t) * (
        0.5 * math.sin(omega * t) ** 2 + 2.0**-n * math.cos(omega * t) ** 2
    )


@serializable_dataclass(frozen=True)
class UniformLossPrediction(SerializableDataclass):
    """leading-order predictions for uniform transmission `eta` on rank `n`"""

    eta: float = serializable_field(default=1.0)
    n: int = serializable_field(default=2)
    x: float = serializable_field(default=0.0)
    epsilon: float = serializable_field(default=math.inf)
    t_m: int = serializable_field(default=0)
    p_max_leading: float = serializable_field(default=0.5)
    omega: float = serializable_field(default=0.0)


def uniform_loss_prediction(eta: float, n: int) -> UniformLossPrediction:
    x, epsilon = x_parameter(eta, n)
    return UniformLossPrediction(
        eta=float(eta),
        n=n,
        x=x,
        epsilon=epsilon,
        t_m=optimal_time_from_x(x, n),
        p_max_leading=pmax_leading(x),
        omega=omega_leading(n),
    )


@serializable_dataclass(frozen=True)
class LossStats(SerializableDataclass):
    """mean transmission, RMS deviation `q` and signed cube-root third moment `w`"""

    mean: float = serializable_field(default=1.0)
    q: float = serializable_field(default=0.0)
    w: float = serializable_field(default=0.0)


def _moments(etas: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """`(mean, q, w)` along the last axis"""
    mean: np.ndarray = np.mean(etas, axis=-1)
    delta: np.ndarray = etas - mean[..., None]
    q: np.ndarray = np.sqrt(np.mean(delta**2, axis=-1))
    w: np.ndarray = np.cbrt(np.mean(delta**3, axis=-1))
    return mean, q, w


def loss_statistics(etas: Sequence[float]) -> LossStats:
    """`<eta>`, `Q` with `Q^2 = mean(delta^2)`, `W` with `W^3 = mean(delta^3)`, where `delta = eta_d - <eta>`"""
    arr: np.ndarray = np.array(validate_transmissions(tuple(etas)), dtype=float)
    mean, q, w = _moments(arr)
    return LossStats(mean=float(mean), q=float(q), w=float(w))


def loss_statistics_batch(etas: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """`loss_statistics` for every row of a `(batch, n)` array, as three arrays"""
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    return _moments(etas)


def directional_lower_bound_at(
    etas: Sequence[float],
    t: int,
    p_ideal: float,
    eta_ref: float,
) -> float | None:
    """lower bound on the target probability at step `t` under directional loss,
    split around a free reference transmission `eta_ref`

    `eta_ref^(2t) {sqrt(p_ideal) - (eta_max/eta_ref) delta_max/(eta_max - eta_ref) [(eta_max/eta_ref)^t - 1]}^2`
    with `delta_max = max(eta_max - eta_ref, eta_ref - eta_min)`. returns `None` when the braced
    term is negative, where the bound does not hold
    """
    arr: tuple[float, ...] = validate_transmissions(tuple(etas))
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t = }")
    if not (0.0 <= p_ideal <= 1.0):
        raise ValueError(f"p_ideal must be a probability, got {p_ideal = }")
    eta_ref = validate_transmission(eta_ref, "eta_ref")
    if t == 0:
        return float(p_ideal)
    if eta_ref == 0.0:
        return 0.0

    eta_max: float = max(arr)
    eta_min: float = min(arr)
    delta_max: float = max(eta_max - eta_ref, eta_ref - eta_min)
    ratio: float = eta_max / eta_ref

    # [(r^t - 1)/(eta_max - eta_ref)] tends to t/eta_ref as eta_ref -> eta_max
    growth: float
    if eta_max == eta_ref:
        growth = t / eta_ref
    else:
        growth = (ratio**t - 1.0) / (eta_max - eta_ref)
    correction: float = ratio * delta_max * growth

    bracket: float = math.sqrt(p_ideal) - correction
    if bracket < 0.0:
        return None
    return eta_ref ** (2 * t) * bracket**2


def directional_lower_bound(
    etas: Sequence[float],
    t: int,
    p_ideal: float,
) -> float | None:
    """`directional_lower_bound_at` with `eta_ref = (eta_max + eta_min)/2`, where it is largest

    reduces to `eta_bar^(2t) {sqrt(p_ideal) - (eta_max/eta_bar) [(eta_max/eta_bar)^t - 1]}^2`
    """
    arr: tuple[float, ...] = validate_transmissions(tuple(etas))
    eta_bar: float = (max(arr) + min(arr)) / 2.0
    return directional_lower_bound_at(arr, t, p_ideal, eta_bar)


@serializable_dataclass(frozen=True)
class EmpiricalBound(SerializableDataclass):
    """`p_max(<eta>) + 2^(-n) Q^2`, recording where `p_max(<eta>)` came from"""

    mean: float = serializable_field(default=1.0)
    q: float = serializable_field(default=0.0)
    n: int = serializable_field(default=2)
    p_max_uniform: float = serializable_field(default=0.5)
    additive: float = serializable_field(default=0.0)
    bound: float = serializable_field(default=0.5)
    source: BoundSource = serializable_field(default="leading")


def empirical_lower_bound(
    mean: float,
    q: float,
    n: int,
    p_max_uniform: float | None = None,
) -> EmpiricalBound:
    """general lower bound on the maximum success probability for directional loss

    `p_max_uniform` is the uniform-loss maximum at `mean`, typically simulated. when
    omitted, `pmax_leading` is used and the record's `source` says so
    """
    validate_rank(n)
    mean = validate_transmission(mean, "mean")
    if q < 0:
        raise ValueError(f"q must be non-negative, got {q = }")

    source: BoundSource = "simulation"
    if p_max_uniform is None:
        source = "leading"
        p_max_uniform = 0.0 if mean == 0.0 else pmax_leading(x_parameter(mean, n)[0])

    additive: float = 2.0**-n * q * q
    return EmpiricalBound(
        mean=mean,
        q=float(q),
        n=n,
        p_max_uniform=float(p_max_uniform),
        additive=additive,
        bound=float(p_max_uniform) + additive,
        source=source,
    )
