import math
from typing import Sequence

import numpy as np
from jaxtyping import Complex, Float

# tolerances
# ==================================================
# single algebraic operation (unitarity, one step)
TOL_ALGEBRAIC: float = 1e-12
# accumulated over many steps
TOL_ACCUMULATED: float = 1e-9

MIN_RANK: int = 1
MAX_RANK: int = 16

# array shorthands
# ==================================================
# amplitudes are stored vertex-major, direction-minor: flat index `d + n*x`
AmplitudeArray = Complex[np.ndarray, "*batch vertex dir"]
CoinMatrix = Complex[np.ndarray, "dir dir"]
PhaseArray = Float[np.ndarray, "*batch vertex dir"]
ProbSeries = Float[np.ndarray, "*batch t"]


class InfeasibleParameterError(ValueError):
    """physically infeasible parameters, such as a transmission outside `[0, 1]`"""

    pass


class InstanceTooLargeError(ValueError):
    """brute-force enumeration requested beyond its size limit"""

    pass


def validate_rank(n: int, min_rank: int = MIN_RANK, max_rank: int = MAX_RANK) -> int:
    """check that `n` is an integer hypercube rank in the supported range"""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"rank must be an int, got {type(n) = } {n = }")
    if not (min_rank <= n <= max_rank):
        raise ValueError(f"rank out of supported range [{min_rank}, {max_rank}]: {n = }")
    return int(n)


def validate_transmission(eta: float, name: str = "eta") -> float:
    """check a transmission coefficient lies in `[0, 1]`"""
    eta_f: float = float(eta)
    if not math.isfinite(eta_f) or eta_f < 0.0 or eta_f > 1.0:
        raise InfeasibleParameterError(
            f"transmission '{name}' must be in [0, 1], got {eta_f}"
        )
    return eta_f


def validate_transmissions(etas: Sequence[float]) -> tuple[float, ...]:
    """check every entry of `etas` with `validate_transmission`"""
    if len(etas) == 0:
        raise ValueError("transmissions must not be empty")
    return tuple(validate_transmission(e, f"etas[{i}]") for i, e in enumerate(etas))


def is_unitary(mat: np.ndarray, tol: float = TOL_ALGEBRAIC) -> bool:
    """whether a square matrix is unitary within `tol` (max-abs deviation of `U^† U` from identity)"""
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    deviation: np.ndarray = mat.conj().T @ mat - np.eye(mat.shape[0])
    return bool(np.max(np.abs(deviation)) <= tol)
