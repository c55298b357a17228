"""Shared tolerances, desk-scale caps and thread-pool sizing."""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

# Coefficients below this magnitude are dropped when a PauliSum is canonicalized
EPS_COEFF = 1e-12
# Relative residual-norm threshold for linear independence and closure checks
EPS_SPAN = 1e-9
# Gradient magnitude separating DIS members from zeros, and class grouping width
EPS_GRAD = 1e-8
# Agreement required between permutation objectives to call a product order-invariant
ORDER_AGREEMENT = 1e-8

MAX_EXP_QUBITS = 14
MAX_DENSE_QUBITS = 10
MAX_DIS_QUBITS = 8
MAX_AMPLITUDES = 12
MAX_SCAN_FACTORS = 8

DEFAULT_SEEDS = tuple(range(32))
THREADS_ENV = "LIEPOOL_THREADS"

logger = logging.getLogger(__name__)


class CapacityError(RuntimeError):
    """Raised when a computation would leave the desk-scale envelope (exponential blow-up)."""


def worker_count(requested: Optional[int] = None) -> int:
    """
    Number of worker threads for closure levels and optimizer multi-starts.

    Args:
        requested: Explicit request (e.g. from the run configuration); capped by LIEPOOL_THREADS

    Returns:
        A positive thread count
    """
    load_dotenv()
    default = min(4, os.cpu_count() or 1)
    count = requested if requested is not None else default

    env_value = os.getenv(THREADS_ENV)
    if env_value:
        try:
            count = min(count, int(env_value))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={env_value!r}")

    return max(1, count)


def parse_seed_schedule(text: str) -> tuple:
    """Parse `a-b` (inclusive) or `s1,s2,...` into a tuple of integer seeds."""
    text = text.strip()
    if not text:
        raise ValueError("empty seed schedule")
    if "-" in text and "," not in text:
        first, last = (int(part) for part in text.split("-", 1))
        if last < first:
            raise ValueError(f"seed range {text!r} is reversed")
        return tuple(range(first, last + 1))
    return tuple(int(part) for part in text.split(","))
