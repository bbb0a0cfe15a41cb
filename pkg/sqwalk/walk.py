"""ideal search walk on the hypercube: coins, marked coin, shift, and t-step evolution

every operator is applied matrix-free on amplitude arrays of shape `(*batch, 2^n, n)`:
the coin is an `n x n` block multiply per vertex, the shift is an index permutation.
the `WalkState` functions are thin wrappers over the array versions
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from sqwalk.state import WalkConfig, WalkState, uniform_initial_state
from sqwalk.util import (
    TOL_ALGEBRAIC,
    AmplitudeArray,
    CoinMatrix,
    ProbSeries,
    is_unitary,
    validate_rank,
)


def grover_coin(n: int) -> CoinMatrix:
    """Grover diffusion coin `-I + 2|s><s|`: diagonal `2/n - 1`, off-diagonal `2/n`"""
    validate_rank(n)
    return np.full((n, n), 2.0 / n, dtype=np.complex128) - np.eye(n, dtype=np.complex128)


def random_unitary(n: int, rng: np.random.Generator) -> CoinMatrix:
    """Haar-random `n x n` unitary

    QR-decomposes a complex Ginibre matrix and fixes the phases of the columns of `Q`
    so the diagonal of `R` is positive
    """
    validate_rank(n)
    z: np.ndarray = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    phases: np.ndarray = np.exp(-1j * np.angle(np.diag(r)))
    return (q * phases[None, :]).astype(np.complex128, copy=False)


@dataclass(frozen=True, eq=False)
class CoinPair:
    """coin `c0` applied at unmarked vertices and `c1` at the marked vertex"""

    c0: CoinMatrix
    c1: CoinMatrix

    def __post_init__(self):
        c0: np.ndarray = np.array(self.c0, dtype=np.complex128)
        c1: np.ndarray = np.array(self.c1, dtype=np.complex128)
        if c0.shape != c1.shape or c0.ndim != 2 or c0.shape[0] != c0.shape[1]:
            raise ValueError(f"coins must be square and equal-sized: {c0.shape = } {c1.shape = }")
        for name, c in (("c0", c0), ("c1", c1)):
            if not is_unitary(c, TOL_ALGEBRAIC):
                raise ValueError(f"coin {name} is not unitary within {TOL_ALGEBRAIC}")
            c.setflags(write=False)
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "c1", c1)

    @property
    def n(self) -> int:
        return self.c0.shape[0]

    @classmethod
    def standard(cls, n: int) -> "CoinPair":
        """Grover coin everywhere, `-I` at the marked vertex"""
        return cls(grover_coin(n), -np.eye(n, dtype=np.complex128))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "CoinPair":
        """two independent Haar-random coins"""
        return cls(random_unitary(n, rng), random_unitary(n, rng))


@lru_cache(maxsize=None)
def _shift_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    x: np.ndarray = np.arange(2**n)[:, None]
    d: np.ndarray = np.arange(n)[None, :]
    flip: np.ndarray = x ^ (1 << d)
    dirs: np.ndarray = np.broadcast_to(d, flip.shape).copy()
    flip.setflags(write=False)
    dirs.setflags(write=False)
    return flip, dirs


@dataclass(frozen=True)
class ShiftRule:
    """hypercube shift `(d, x) -> (d, x xor 2^d)`. bijective and self-inverse"""

    n: int

    def __post_init__(self):
        validate_rank(self.n)

    @cached_property
    def source_index(self) -> tuple[np.ndarray, np.ndarray]:
        """`(vertex, dir)` index arrays: new `[x, d]` reads old `[x ^ 2^d, d]`"""
        return _shift_indices(self.n)

    def destination(self, d: int, x: int) -> tuple[int, int]:
        return d, x ^ (1 << d)

    def apply(self, amps: AmplitudeArray) -> AmplitudeArray:
        flip, dirs = self.source_index
        return amps[..., flip, dirs]


def marked_coin_array(amps: AmplitudeArray, target: int, pair: CoinPair) -> AmplitudeArray:
    """`C' = C0 (x) 1 + (C1 - C0) (x) |x_t><x_t|` on an amplitude array"""
    if amps.shape[-1] != pair.n:
        raise ValueError(
            f"coin dimension {pair.n} does not match amplitudes {amps.shape = }"
        )
    marked: np.ndarray = amps[..., target, :] @ pair.c1.T
    out: np.ndarray = amps @ pair.c0.T
    out[..., target, :] = marked
    return out


def shift_array(amps: AmplitudeArray) -> AmplitudeArray:
    return ShiftRule(amps.shape[-1]).apply(amps)


def apply_marked_coin(state: WalkState, cfg: WalkConfig, pair: CoinPair) -> WalkState:
    """apply `c1` to the coin block of `cfg.target` and `c0` to every other block"""
    if state.n != cfg.n:
        raise ValueError(f"state rank {state.n} does not match config rank {cfg.n}")
    return WalkState(marked_coin_array(state.amplitudes, cfg.target, pair))


def apply_shift(state: WalkState) -> WalkState:
    """move the amplitude at `(d, x)` to `(d, x xor 2^d)`"""
    return WalkState(shift_array(state.amplitudes))


def evolve_ideal(
    state: WalkState,
    cfg: WalkConfig,
    t: int,
    pair: CoinPair | None = None,
) -> WalkState:
    """`t` applications of `U' = S C'`, coin first"""
    if t < 0:
        raise ValueError(f"step count must be non-negative, got {t = }")
    if pair is None:
        pair = CoinPair.standard(cfg.n)
    if state.n != cfg.n:
        raise ValueError(f"state rank {state.n} does not match config rank {cfg.n}")
    amps: np.ndarray = state.amplitudes
    for _ in range(t):
        amps = shift_array(marked_coin_array(amps, cfg.target, pair))
    return WalkState(amps)


def ideal_series(
    cfg: WalkConfig,
    t_max: int,
    pair: CoinPair | None = None,
) -> ProbSeries:
    """target probability `p(t)` for `t = 0..t_max` of the ideal walk from the uniform state"""
    if t_max < 0:
        raise ValueError(f"t_max must be non-negative, got {t_max = }")
    if pair is None:
        pair = CoinPair.standard(cfg.n)
    amps: np.ndarray = uniform_initial_state(cfg.n).amplitudes
    probs: np.ndarray = np.empty(t_max + 1)
    probs[0] = np.sum(np.abs(amps[cfg.target]) ** 2)
    for t in range(1, t_max + 1):
        amps = shift_array(marked_coin_array(amps, cfg.target, pair))
        probs[t] = np.sum(np.abs(amps[cfg.target]) ** 2)
    return probs
