"""Shared scenario fixtures: road files and scenario builders for tests."""

from pathlib import Path

STRAIGHT_RNDF = """
segment 1
lane 1.1 4.0
waypoint 1.1.1 0.0 0.0
waypoint 1.1.2 10.0 0.0
waypoint 1.1.3 20.0 0.0
waypoint 1.1.4 30.0 0.0
waypoint 1.1.5 40.0 0.0
waypoint 1.1.6 50.0 0.0
waypoint 1.1.7 60.0 0.0
waypoint 1.1.8 70.0 0.0
waypoint 1.1.9 80.0 0.0
waypoint 1.1.10 90.0 0.0
waypoint 1.1.11 100.0 0.0
waypoint 1.1.12 110.0 0.0
waypoint 1.1.13 120.0 0.0
waypoint 1.1.14 130.0 0.0
waypoint 1.1.15 140.0 0.0
waypoint 1.1.16 150.0 0.0
checkpoint 1.1.8 1
checkpoint 1.1.16 2
"""

STRAIGHT_SCENARIO = """
name: straight
rndf: straight.rndf
mdf:
  checkpoints: [1, 2]
  default_max_mps: 10.0
duration: 60
seed: 7
validators:
  - {kind: collision}
  - {kind: min_clearance, threshold: 0.5}
  - {kind: speed_limit, tolerance: 1.5, grace: 1.0}
  - {kind: checkpoint_completion}
  - {kind: timeout, limit: 60}
  - {kind: lane_departure, grace: 2.0}
"""

# two-lane road with a stopped car in the ego lane and a wall to the far left
OVERTAKE_RNDF = """
segment 1
lane 1.1 4.0
waypoint 1.1.1 0.0 0.0
waypoint 1.1.2 15.0 0.0
waypoint 1.1.3 30.0 0.0
waypoint 1.1.4 45.0 0.0
waypoint 1.1.5 60.0 0.0
waypoint 1.1.6 75.0 0.0
waypoint 1.1.7 90.0 0.0
waypoint 1.1.8 105.0 0.0
waypoint 1.1.9 120.0 0.0
checkpoint 1.1.9 1
lane 1.2 4.0
waypoint 1.2.1 120.0 4.0
waypoint 1.2.2 90.0 4.0
waypoint 1.2.3 60.0 4.0
waypoint 1.2.4 30.0 4.0
waypoint 1.2.5 0.0 4.0
"""

OVERTAKE_SCENARIO = """
name: overtake
rndf: overtake.rndf
mdf:
  checkpoints: [1]
  default_max_mps: 8.0
duration: 90
seed: 11
obstacles:
  - [[48.0, -1.0], [52.5, -1.0], [52.5, 1.0], [48.0, 1.0]]
  - [[-5.0, 7.5], [125.0, 7.5], [125.0, 9.0], [-5.0, 9.0]]
validators:
  - {kind: collision}
  - {kind: min_clearance, threshold: 0.4}
  - {kind: checkpoint_completion}
  - {kind: timeout, limit: 90}
"""

# ring road: direct east leg, barrier across both lanes, southern bypass
BLOCKED_RNDF = """
segment 1
lane 1.1 4.5
waypoint 1.1.1 0.0 0.0
waypoint 1.1.2 12.0 0.0
waypoint 1.1.3 24.0 0.0
waypoint 1.1.4 36.0 0.0
waypoint 1.1.5 48.0 0.0
waypoint 1.1.6 60.0 0.0
waypoint 1.1.7 72.0 0.0
waypoint 1.1.8 84.0 0.0
waypoint 1.1.9 96.0 0.0
checkpoint 1.1.9 1
segment 2
lane 2.1 4.5
waypoint 2.1.1 96.0 4.5
waypoint 2.1.2 72.0 4.5
waypoint 2.1.3 48.0 4.5
waypoint 2.1.4 24.0 4.5
waypoint 2.1.5 0.0 4.5
segment 3
lane 3.1 6.0
waypoint 3.1.1 -8.0 0.0
waypoint 3.1.2 -14.0 -8.0
waypoint 3.1.3 -14.0 -20.0
waypoint 3.1.4 0.0 -28.0
waypoint 3.1.5 48.0 -28.0
waypoint 3.1.6 96.0 -28.0
waypoint 3.1.7 104.0 -20.0
waypoint 3.1.8 104.0 -8.0
waypoint 3.1.9 98.0 -2.0
exit 1.1.9 2.1.1
exit 2.1.5 3.1.1
exit 3.1.9 1.1.9
"""

BLOCKED_SCENARIO = """
name: blocked_road
rndf: blocked.rndf
mdf:
  checkpoints: [1]
  default_max_mps: 8.0
duration: 150
seed: 3
obstacles:
  - [[54.0, -3.5], [56.0, -3.5], [56.0, 7.5], [54.0, 7.5]]
validators:
  - {kind: collision}
  - {kind: min_clearance, threshold: 0.3}
  - {kind: checkpoint_completion}
  - {kind: timeout, limit: 150}
"""


def write_straight(tmp: Path, extra: str = "") -> Path:
    (tmp / "straight.rndf").write_text(STRAIGHT_RNDF)
    path = tmp / "straight.yaml"
    path.write_text(STRAIGHT_SCENARIO + extra)
    return path


def write_overtake(tmp: Path, extra: str = "") -> Path:
    (tmp / "overtake.rndf").write_text(OVERTAKE_RNDF)
    path = tmp / "overtake.yaml"
    path.write_text(OVERTAKE_SCENARIO + extra)
    return path


def write_blocked(tmp: Path, extra: str = "") -> Path:
    (tmp / "blocked.rndf").write_text(BLOCKED_RNDF)
    path = tmp / "blocked.yaml"
    path.write_text(BLOCKED_SCENARIO + extra)
    return path


def load(path: Path):
    from drivesim.sim import parse_scenario

    return parse_scenario(path.read_text(), base_dir=path.parent)
