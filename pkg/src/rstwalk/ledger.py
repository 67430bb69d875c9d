"""Query accounting for the emulated quantum subroutines.

Each phase records two numbers: the classical oracle calls the emulation
really made, and the quantum-equivalent query cost charged by the formula of
the routine it stands in for (polylog factors set to 1).
"""

from __future__ import annotations

import math
import threading
import time
from collections import defaultdict
from contextlib import contextmanager

# phase names
TREE_INIT = "tree_init"
ORACLE_INIT = "oracle_init"
ISO_SAMPLE = "iso_sample"


def tree_init_cost(m: int, n: int) -> float:
    return math.sqrt(m * n)


def oracle_init_cost(m: int, n: int, eps: float) -> float:
    return math.sqrt(m * n) / eps


def iso_sample_cost(m_prime: int, k: int) -> float:
    return math.sqrt(m_prime * k)


class QueryLedger:
    def __init__(self):
        self._lock = threading.Lock()
        self.classical_calls = defaultdict(int)
        self.charged = defaultdict(float)
        self.invocations = defaultdict(int)
        self.wall_clock = defaultdict(float)

    def record(self, phase: str, *, calls: int = 0, charged: float = 0.0, invocations: int = 1):
        if calls < 0 or charged < 0 or invocations < 0:
            raise ValueError("ledger counters are monotone; negative increments are not allowed")
        with self._lock:
            self.classical_calls[phase] += int(calls)
            self.charged[phase] += float(charged)
            self.invocations[phase] += int(invocations)

    @contextmanager
    def timer(self, phase: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            with self._lock:
                self.wall_clock[phase] += dt

    def merge(self, other: "QueryLedger") -> None:
        with self._lock:
            for phase, x in other.classical_calls.items():
                self.classical_calls[phase] += x
            for phase, x in other.charged.items():
                self.charged[phase] += x
            for phase, x in other.invocations.items():
                self.invocations[phase] += x
            for phase, x in other.wall_clock.items():
                self.wall_clock[phase] += x

    @property
    def total_charged(self) -> float:
        return math.fsum(self.charged.values())

    @property
    def total_classical(self) -> int:
        return sum(self.classical_calls.values())

    def summary(self, timings: bool = False) -> dict[str, str]:
        """Flat ``key -> value`` view in a stable order."""
        out = {}
        phases = sorted(set(self.charged) | set(self.classical_calls))
        for phase in phases:
            out[f"ledger.{phase}.invocations"] = str(self.invocations[phase])
            out[f"ledger.{phase}.classical_calls"] = str(self.classical_calls[phase])
            out[f"ledger.{phase}.charged_queries"] = f"{self.charged[phase]:.6f}"
            if timings:
                out[f"ledger.{phase}.wall_seconds"] = f"{self.wall_clock[phase]:.6f}"
        out["ledger.total.classical_calls"] = str(self.total_classical)
        out["ledger.total.charged_queries"] = f"{self.total_charged:.6f}"
        return out
