"""Heartbeat supervision of the pipeline stages.

Stages beat when they run; missing three expected beats restarts the
stage and all transitive dependents in dependency order.  The slave
watchdog itself is monitored by a master: silence escalates to an
emergency stop.  A stage restarting three times within ten seconds
aborts the mission.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class StageSpec:
    name: str
    interval: float
    deps: tuple[str, ...] = ()


@dataclass
class WatchdogActions:
    restarts: list[str] = field(default_factory=list)
    estop: bool = False
    abort: bool = False
    notes: list[str] = field(default_factory=list)


class Watchdog:
    def __init__(self, stages: list[StageSpec], miss_limit: int = 3,
                 restart_limit: int = 3, restart_window: float = 10.0,
                 slave_interval: float = 0.1):
        self.stages = {s.name: s for s in stages}
        self.miss_limit = miss_limit
        self.restart_limit = restart_limit
        self.restart_window = restart_window
        self.slave_interval = slave_interval
        self.last_beat: dict[str, float] = {name: 0.0 for name in self.stages}
        self.last_slave_beat: float = 0.0
        self.restart_log: dict[str, list[float]] = {name: [] for name in self.stages}
        self._order = self._topological_order()

    def _topological_order(self) -> list[str]:
        order: list[str] = []
        seen: set[str] = set()

        def visit(name: str, trail: tuple[str, ...] = ()):
            if name in seen:
                return
            if name in trail:
                raise ValueError(f"stage dependency cycle through {name}")
            for dep in self.stages[name].deps:
                visit(dep, trail + (name,))
            seen.add(name)
            order.append(name)

        for name in sorted(self.stages):
            visit(name)
        return order

    def dependents_closure(self, name: str) -> list[str]:
        """The stage plus everything depending on it, in restart order."""
        affected = {name}
        changed = True
        while changed:
            changed = False
            for s in self.stages.values():
                if s.name not in affected and any(d in affected for d in s.deps):
                    affected.add(s.name)
                    changed = True
        return [s for s in self._order if s in affected]

    def beat(self, stage: str, t: float) -> None:
        self.last_beat[stage] = t

    def slave_beat(self, t: float) -> None:
        self.last_slave_beat = t

    def tick(self, t: float) -> WatchdogActions:
        actions = WatchdogActions()
        # master watches the slave: silence -> emergency stop
        if t - self.last_slave_beat > self.miss_limit * self.slave_interval:
            actions.estop = True
            actions.notes.append(
                f"slave watchdog silent since {self.last_slave_beat:.2f}")
            return actions
        restart_set: list[str] = []
        for name, spec in self.stages.items():
            if t - self.last_beat[name] > self.miss_limit * spec.interval:
                for member in self.dependents_closure(name):
                    if member not in restart_set:
                        restart_set.append(member)
                actions.notes.append(
                    f"stage {name} missed heartbeats at t={t:.2f}")
        if restart_set:
            ordered = [s for s in self._order if s in restart_set]
            for name in ordered:
                log = self.restart_log[name]
                log.append(t)
                recent = [x for x in log if t - x <= self.restart_window]
                self.restart_log[name] = recent
                self.last_beat[name] = t   # grace after restart
                if len(recent) > self.restart_limit:
                    actions.abort = True
                    actions.notes.append(
                        f"stage {name} restarted {len(recent)} times in "
                        f"{self.restart_window:.0f} s")
            actions.restarts = ordered
        return actions


def watchdog_tick(watchdog: Watchdog, heartbeats: dict[str, float],
                  now: float) -> WatchdogActions:
    """Convenience wrapper: feed collected heartbeats, then evaluate."""
    for stage, t in heartbeats.items():
        watchdog.beat(stage, t)
    return watchdog.tick(now)
