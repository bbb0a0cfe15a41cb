"""single-excitation states on the coin ⊗ hypercube space

the vacuum is never stored: once loss is applied, states are sub-normalized and the
norm deficit `1 - norm_squared(state)` is the probability the photon was lost
"""

from dataclasses import dataclass

import numpy as np

from muutils.json_serialize import (
    SerializableDataclass,
    serializable_dataclass,
    serializable_field,
)
from sqwalk.util import TOL_ACCUMULATED, AmplitudeArray, validate_rank

# pylint: disable=missing-class-docstring


@serializable_dataclass(frozen=True)
class WalkConfig(SerializableDataclass):
    """hypercube rank `n` and marked vertex `target`"""

    n: int = serializable_field()
    target: int = serializable_field(default=0)

    def __post_init__(self):
        validate_rank(self.n, min_rank=2)
        if not (0 <= self.target < self.n_vertices):
            raise ValueError(
                f"target vertex must be in [0, 2^n): {self.target = }, {self.n = }"
            )

    @property
    def n_vertices(self) -> int:
        return 2**self.n


@dataclass(frozen=True, eq=False)
class WalkState:
    """amplitudes `a[x, d]` for vertex `x` and direction `d`

    stored with shape `(2^n, n)`, so the flat index is `d + n*x`. the array is made
    read-only on construction; operations return new states
    """

    amplitudes: AmplitudeArray

    def __post_init__(self):
        amps: np.ndarray = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 2:
            raise ValueError(f"amplitudes must be 2-d (vertex, dir), got {amps.shape = }")
        n: int = amps.shape[1]
        validate_rank(n)
        if amps.shape[0] != 2**n:
            raise ValueError(
                f"amplitude count must be n*2^n, got {amps.shape = } for {n = }"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm_sq: float = float(np.sum(np.abs(amps) ** 2))
        if norm_sq > 1.0 + TOL_ACCUMULATED:
            raise ValueError(f"state norm exceeds 1: {norm_sq = }")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.amplitudes.shape[0]

    def flat(self) -> np.ndarray:
        """amplitudes as a flat vector, index `d + n*x`"""
        return self.amplitudes.reshape(-1)

    @classmethod
    def basis(cls, n: int, d: int, x: int, amplitude: complex = 1.0) -> "WalkState":
        """state with a single nonzero amplitude at `(d, x)`"""
        validate_rank(n)
        amps: np.ndarray = np.zeros((2**n, n), dtype=np.complex128)
        amps[x, d] = amplitude
        return cls(amps)

    @classmethod
    def zero(cls, n: int) -> "WalkState":
        validate_rank(n)
        return cls(np.zeros((2**n, n), dtype=np.complex128))

    def __eq__(self, other) -> bool:
        if not isinstance(other, WalkState):
            return NotImplemented
        return bool(np.array_equal(self.amplitudes, other.amplitudes))

    def __hash__(self) -> int:
        return hash(self.amplitudes.tobytes())


def uniform_initial_state(n: int) -> WalkState:
    """equal superposition over every `(d, x)`, each amplitude `1/sqrt(n 2^n)`"""
    validate_rank(n)
    return WalkState(
        np.full((2**n, n), 1.0 / np.sqrt(n * 2**n), dtype=np.complex128)
    )


def vertex_probability(state: WalkState, x: int) -> float:
    """probability of finding the walker at vertex `x`, summed over directions"""
    if not (0 <= x < state.n_vertices):
        raise IndexError(f"vertex out of range: {x = }, {state.n_vertices = }")
    return float(np.sum(np.abs(state.amplitudes[x]) ** 2))


def vertex_probabilities(state: WalkState) -> np.ndarray:
    """`vertex_probability` for every vertex at once"""
    return np.sum(np.abs(state.amplitudes) ** 2, axis=-1)


def norm_squared(state: WalkState) -> float:
    """total probability still in the single-excitation space"""
    return float(np.sum(np.abs(state.amplitudes) ** 2))
