"""brute-force path-sum evaluation of the target probability

the amplitude at `(a_1, x)` after `t` steps is a sum over direction sequences
`a = (a_1, ..., a_t)`, `a_1` being the direction of the *last* step:

    (1/sqrt(n 2^n)) sum_{a_2..a_t} sigma(a) e^{i Phi(a)} Xi(a)

with `E(j, 1) = e_{a_1} xor ... xor e_{a_j}` and `y_j = x xor E(j, 1)` the vertex left
by step `t + 1 - j`:

- `Xi(a) = prod_{j=1}^{t-1} C(y_j)[a_j, a_{j+1}]`, where `C(y) = C1` iff `y` is the target,
  i.e. iff `E(j, 1)` equals the relative target `x_t xor x`
- `Phi(a) = sum_{j=1}^{t} phi^{(t+1-j)}[y_j, a_j]`
- `sigma(a) = sum_b C(y_t)[a_t, b]` is the coin acting on the uniform initial state;
  `+1` or `-1` for the Grover / `-I` pair

the probability splits into the incoherent part `sum_a |amp|^2` and the coherent
cross terms. enumeration is exponential, so instance sizes are capped
"""

from dataclasses import dataclass
from functools import reduce
from operator import xor

import numpy as np

from muutils.json_serialize import (
    SerializableDataclass,
    serializable_dataclass,
    serializable_field,
)
from sqwalk.noise import PhaseHistory
from sqwalk.state import WalkConfig
from sqwalk.util import InstanceTooLargeError
from sqwalk.walk import CoinPair

# pylint: disable=missing-class-docstring

PATHSUM_MAX_RANK: int = 4
PATHSUM_MAX_PATHS: int = 10**6


@dataclass(frozen=True)
class PathIndex:
    """direction sequence `(a_1, ..., a_t)` on a rank-`n` hypercube, `a_1` taken last"""

    a: tuple[int, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(d) for d in self.a))
        if any(not (0 <= d < self.n) for d in self.a):
            raise ValueError(f"directions must be in [0, {self.n}): {self.a = }")

    @property
    def t(self) -> int:
        return len(self.a)

    def xor_span(self, k: int, l: int) -> int:
        """`E(k, l)`: xor of `2^{a_j}` for `l <= j <= k` (1-based); `0` when `k < l`"""
        return reduce(xor, (1 << self.a[j - 1] for j in range(l, k + 1)), 0)


@serializable_dataclass(frozen=True)
class PathSumResult(SerializableDataclass):
    incoherent: float = serializable_field(default=0.0)
    coherent: float = serializable_field(default=0.0)
    total: float = serializable_field(default=0.0)


def check_instance_size(n: int, t: int) -> None:
    """raise `InstanceTooLargeError` unless `n <= 4` and `n^t <= 10^6`"""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t = }")
    if n > PATHSUM_MAX_RANK or n**t > PATHSUM_MAX_PATHS:
        raise InstanceTooLargeError(
            f"path sum over n^t = {n}^{t} paths exceeds the limit "
            f"(n <= {PATHSUM_MAX_RANK}, n^t <= {PATHSUM_MAX_PATHS})"
        )


def _coin_at(pair: CoinPair, marked: bool) -> np.ndarray:
    return pair.c1 if marked else pair.c0


def xi_product(a: PathIndex, xtg: int, pair: CoinPair) -> complex:
    """`prod_{j=1}^{t-1} C(E(j,1))[a_j, a_{j+1}]`, with `C1` where `E(j,1) == xtg`; `1` for `t <= 1`"""
    if a.n != pair.n:
        raise ValueError(f"path rank {a.n} does not match coin dimension {pair.n}")
    prod: complex = 1.0 + 0.0j
    span: int = 0
    for j in range(1, a.t):
        span ^= 1 << a.a[j - 1]
        coin: np.ndarray = _coin_at(pair, span == xtg)
        prod *= complex(coin[a.a[j - 1], a.a[j]])
    return prod


@dataclass
class _Frontier:
    """all path prefixes `(a_1..a_j)` sharing one leading direction, as parallel arrays"""

    span: np.ndarray  # E(j, 1)
    last: np.ndarray  # a_j
    xi: np.ndarray  # partial Xi, factors 1..j-1
    phase: np.ndarray  # partial Phi, terms 1..j

    def extend(
        self,
        pair: CoinPair,
        xtg: int,
        phases: np.ndarray | None,
        x: int,
    ) -> "_Frontier":
        """append every direction `b` as `a_{j+1}`, using phase field `phases` (indexed `[vertex, dir]`)"""
        n: int = pair.n
        dirs: np.ndarray = np.arange(n)
        marked: np.ndarray = self.span == xtg
        # coin entry C(y_j)[a_j, b] for every prefix and every b
        factors: np.ndarray = np.where(
            marked[:, None], pair.c1[self.last], pair.c0[self.last]
        )
        span: np.ndarray = (self.span[:, None] ^ (1 << dirs)[None, :]).reshape(-1)
        last: np.ndarray = np.broadcast_to(dirs, (len(self.last), n)).reshape(-1)
        phase: np.ndarray = np.repeat(self.phase, n)
        if phases is not None:
            phase = phase + phases[x ^ span, last]
        return _Frontier(
            span=span,
            last=last,
            xi=(self.xi[:, None] * factors).reshape(-1),
            phase=phase,
        )


def _enumerate_leading(
    a1: int,
    pair: CoinPair,
    xtg: int,
    history: PhaseHistory | None,
    x: int,
    t: int,
) -> _Frontier:
    """every path with leading direction `a1`, expanded depth by depth to length `t`"""
    # step `t + 1 - j` uses field index `t - j`
    first: np.ndarray | None = None if history is None else history.step(t).phases
    span: np.ndarray = np.array([1 << a1])
    frontier = _Frontier(
        span=span,
        last=np.array([a1]),
        xi=np.ones(1, dtype=np.complex128),
        phase=np.zeros(1) if first is None else first[x ^ span, [a1]].astype(float),
    )
    for j in range(1, t):
        phases: np.ndarray | None = None if history is None else history.step(t - j).phases
        frontier = frontier.extend(pair, xtg, phases, x)
    return frontier


def _validate(cfg: WalkConfig, pair: CoinPair, x: int, t: int, history: PhaseHistory | None):
    if pair.n != cfg.n:
        raise ValueError(f"coin dimension {pair.n} does not match config rank {cfg.n}")
    if not (0 <= x < cfg.n_vertices):
        raise IndexError(f"vertex out of range: {x = }, {cfg.n_vertices = }")
    check_instance_size(cfg.n, t)
    if history is not None:
        if len(history) < t:
            raise ValueError(f"phase history has {len(history)} fields, need {t = }")
        if len(history) > 0 and history.step(1).n != cfg.n:
            raise ValueError(f"phase history rank does not match config rank {cfg.n}")


def pathsum_probability(
    cfg: WalkConfig,
    pair: CoinPair | None = None,
    history: PhaseHistory | None = None,
    x: int | None = None,
    t: int = 0,
) -> PathSumResult:
    """probability at vertex `x` (default: the target) after `t` steps, by explicit enumeration

    `history` supplies the phase field of steps `1..t`; `None` means no phase errors.
    returns the incoherent and coherent parts along with their sum
    """
    if pair is None:
        pair = CoinPair.standard(cfg.n)
    if x is None:
        x = cfg.target
    _validate(cfg, pair, x, t, history)

    n: int = cfg.n
    if t == 0:
        uniform: float = 2.0**-n
        return PathSumResult(incoherent=uniform, coherent=0.0, total=uniform)

    prefactor: float = 1.0 / np.sqrt(n * 2**n)
    xtg: int = cfg.target ^ x
    # coin acting on the uniform initial state at y_t
    coin_sums_0: np.ndarray = pair.c0.sum(axis=1)
    coin_sums_1: np.ndarray = pair.c1.sum(axis=1)
    incoherent: float = 0.0
    total: float = 0.0
    for a1 in range(n):
        paths: _Frontier = _enumerate_leading(a1, pair, xtg, history, x, t)
        sigma: np.ndarray = np.where(
            paths.span == xtg, coin_sums_1[paths.last], coin_sums_0[paths.last]
        )
        amps: np.ndarray = prefactor * sigma * np.exp(1j * paths.phase) * paths.xi
        incoherent += float(np.sum(np.abs(amps) ** 2))
        total += float(np.abs(np.sum(amps)) ** 2)

    return PathSumResult(incoherent=incoherent, coherent=total - incoherent, total=total)


def incoherent_term(
    cfg: WalkConfig,
    pair: CoinPair | None = None,
    x: int | None = None,
    t: int = 0,
) -> float:
    """`(1/(n 2^n)) sum_a |Xi(a)|^2`, which is `2^(-n)` for any pair of unitary coins"""
    if pair is None:
        pair = CoinPair.standard(cfg.n)
    if x is None:
        x = cfg.target
    _validate(cfg, pair, x, t, None)

    n: int = cfg.n
    if t == 0:
        return 2.0**-n
    xtg: int = cfg.target ^ x
    acc: float = 0.0
    for a1 in range(n):
        paths: _Frontier = _enumerate_leading(a1, pair, xtg, None, x, t)
        acc += float(np.sum(np.abs(paths.xi) ** 2))
    return acc / (n * 2**n)
