"""Process-wide computational limits."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

DEFAULT_CORE_CAP = 24
DEFAULT_MEM_BUDGET = 512 * 2**20


@dataclass(frozen=True)
class Limits:
    """Caps for exact enumeration.

    core_cap : largest non-isolated core m' that is enumerated (2**m' subsets).
    mem_budget : bytes allowed for a cached core statistic table; larger
        tables are streamed from the subset enumeration on every evaluation.
    """

    core_cap: int = DEFAULT_CORE_CAP
    mem_budget: int = DEFAULT_MEM_BUDGET


_limits = Limits()


def get_limits() -> Limits:
    return _limits


def set_limits(**kwargs) -> Limits:
    """Update the default limits (``core_cap=``, ``mem_budget=``); returns the new value."""
    global _limits
    _limits = replace(_limits, **kwargs)
    return _limits


def thread_count() -> int:
    """Worker bound from ``HIERNET_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("HIERNET_THREADS", "1")))
    except ValueError:
        return 1
