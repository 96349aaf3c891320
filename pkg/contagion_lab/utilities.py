import hashlib
import json
import math
import os

import numpy as np
from memory_profiler import memory_usage
from scipy.stats import binomtest

OUTPUT_DIR_ENV = "CONTAGION_LAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"


def derive_seed(base_seed: int, *indices: int) -> int:
    """
    Derive an independent 64-bit seed from a base seed and a tuple of indices.

    The hash is pinned (sha256 over the decimal string "base:i:j:...") so that a sweep or a trial batch
    replays identically on any machine and any degree of parallelism.

    Parameters:
        base_seed (int): The seed the whole batch was started with.
        *indices (int): Point index, replica index, trial index ... in that order.

    Returns:
        int: The derived seed, in [0, 2**64).
    """
    key = ":".join(str(int(i)) for i in (base_seed, *indices)).encode("ascii")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "little")


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple:
    """
    Wilson score interval for a binomial success probability.

    Parameters:
        successes (int): Number of successful trials.
        trials (int): Number of trials, at least 1.
        confidence (float): Confidence level of the interval.

    Returns:
        tuple: (low, high) bounds of the interval.
    """
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def proportion_stderr(successes: int, trials: int) -> float:
    p = successes / trials
    return float(np.sqrt(p * (1.0 - p) / trials))


def measure_memory_usage(func, *args, **kwargs):
    """
    Measure memory usage during the execution of a function.

    Parameters:
    - func: The target function to measure.
    - *args: Positional arguments for the target function.
    - **kwargs: Keyword arguments for the target function.

    Returns:
    - result: The result of the target function.
    - memory_diff: Peak memory (MB) above the level measured right before the call.
    """
    mem_before = max(memory_usage())
    memory_values, result = memory_usage(proc=(func, args, kwargs), interval=1e-3, retval=True, max_usage=False)
    memory_diff = max(memory_values) - mem_before
    return result, memory_diff


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)


def ensure_parent_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(parent):
        os.makedirs(parent, exist_ok=True)


def _to_builtin(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(data, path: str) -> None:
    ensure_parent_dir(path)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_to_builtin)


def to_json(data) -> str:
    return json.dumps(data, sort_keys=True, default=_to_builtin)


def snapped_power(base: float, exponent: float) -> float:
    """base ** exponent, snapped to the nearest integer when it lies within float noise of one."""
    value = float(base) ** float(exponent)
    nearest = round(value)
    if abs(value - nearest) < 1e-9 * max(1.0, value):
        return float(nearest)
    return value


def ceil_power(base: float, exponent: float) -> int:
    return int(math.ceil(snapped_power(base, exponent)))


def floor_power(base: float, exponent: float) -> int:
    return int(math.floor(snapped_power(base, exponent)))
