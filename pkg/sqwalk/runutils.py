from itertools import islice
from multiprocessing import Pool
from typing import Any, Callable, Iterable, Sequence, TypeVar

import numpy as np

DEFAULT_SEED: int = 42

# ensemble members per work unit. fixed so that results do not depend on the worker count
ENSEMBLE_CHUNK: int = 64

T = TypeVar("T")
R = TypeVar("R")


def sample_rng(master_seed: int, k: int) -> np.random.Generator:
    """generator for ensemble member `k`, derived from `(master_seed, k)` only

    uses `SeedSequence(master_seed, spawn_key=(k,))` feeding numpy's default `PCG64`,
    so member `k` sees the same stream regardless of which other members are run,
    in which order, or on which worker
    """
    if k < 0:
        raise ValueError(f"sample index must be non-negative, got {k = }")
    return np.random.default_rng(
        np.random.SeedSequence(int(master_seed), spawn_key=(int(k),))
    )


def chunks(it: Iterable[T], chunk_size: int) -> Iterable[list[T]]:
    """Yield successive chunks from an iterator."""
    # https://stackoverflow.com/a/61435714
    iterator = iter(it)
    while chunk := list(islice(iterator, chunk_size)):
        yield chunk


def parallel_map(
    func: Callable[[T], R],
    tasks: Sequence[T],
    threads: int = 1,
) -> list[R]:
    """map `func` over `tasks`, keeping task order

    runs in-process for `threads <= 1` or a single task, otherwise in a `multiprocessing.Pool`.
    `func` and the tasks must be picklable in the latter case
    """
    if threads <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]

    with Pool(processes=min(threads, len(tasks))) as pool:
        return pool.map(func, tasks)


F = TypeVar("F", bound=Callable[..., Any])


def register_method(
    method_dict: dict[str, Callable[..., Any]],
    custom_name: str | None = None,
) -> Callable[[F], F]:
    """Decorator to add a method to the method_dict"""

    def decorator(method: F) -> F:
        if custom_name is None:
            method_name: str = method.__name__
        else:
            method_name = custom_name
        assert (
            method_name not in method_dict
        ), f"Method name already exists in method_dict: {method_name = }, {list(method_dict.keys()) = }"
        method_dict[method_name] = method
        return method

    return decorator
