"""Simulated clock and the wall-clock access audit.

Time is fully owned by the simulator: components receive the simulated
time as a value and never consult the operating system.  The audit hook
wraps the ``time`` module's sources and records any call whose caller
lives inside this package, so tests can fail on violations.
"""

from __future__ import annotations

import inspect
import time as _time
from contextlib import contextmanager
from dataclasses import dataclass


@dataclass
class SimClock:
    dt: float
    tick: int = 0

    @property
    def now(self) -> float:
        return self.tick * self.dt

    def advance(self) -> float:
        self.tick += 1
        return self.now


_AUDITED = ("time", "monotonic", "perf_counter", "time_ns", "monotonic_ns",
            "perf_counter_ns")


@contextmanager
def wall_clock_audit(package_prefix: str = "drivesim", allow: tuple[str, ...] = ("drivesim.service", "drivesim.cli")):
    """Record wall-clock reads made from inside the package.

    Yields a list of offending "module.function" strings; service and CLI
    boundaries are exempt (they pace real deployments).
    """
    violations: list[str] = []
    originals = {name: getattr(_time, name) for name in _AUDITED}

    def make_wrapper(name, fn):
        def wrapper(*args, **kwargs):
            frame = inspect.currentframe().f_back
            module = frame.f_globals.get("__name__", "") if frame else ""
            if module.startswith(package_prefix) and not module.startswith(allow):
                violations.append(f"{module}:{frame.f_lineno} -> time.{name}")
            return fn(*args, **kwargs)
        return wrapper

    for name, fn in originals.items():
        setattr(_time, name, make_wrapper(name, fn))
    try:
        yield violations
    finally:
        for name, fn in originals.items():
            setattr(_time, name, fn)
