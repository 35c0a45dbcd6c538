import numpy as np
import pytest

from drivesim.sim import (
    MDF,
    RndfError,
    Route,
    RouteError,
    nearest_waypoint,
    parse_rndf,
    serialize_rndf,
    shortest_path,
)

MINIMAL = """
segment 1
lane 1.1 4.0
waypoint 1.1.1 0.0 0.0
waypoint 1.1.2 10.0 0.0
"""

TWO_ROAD = """
segment 1
lane 1.1 4.0
waypoint 1.1.1 0.0 0.0
waypoint 1.1.2 20.0 0.0
waypoint 1.1.3 40.0 0.0
stop 1.1.2
checkpoint 1.1.3 1
segment 2
lane 2.1 4.0
waypoint 2.1.1 40.0 4.0
waypoint 2.1.2 0.0 4.0
exit 1.1.3 2.1.1
exit 2.1.2 1.1.1
zone 3
perimeter 50.0 -10.0
perimeter 70.0 -10.0
perimeter 70.0 10.0
perimeter 50.0 10.0
spot 3.1 60.0 0.0 0.0
"""


def test_minimal_parse():
    rndf = parse_rndf(MINIMAL)
    assert len(rndf.lanes) == 1
    lane = rndf.lanes["1.1"]
    assert len(lane.waypoints) == 2
    assert lane.width == 4.0
    assert lane.waypoints[0].xy == (0.0, 0.0)


def test_full_parse():
    rndf = parse_rndf(TWO_ROAD)
    assert rndf.waypoint((1, 1, 2)).is_stop
    assert rndf.checkpoints()[1].id == (1, 1, 3)
    assert ((1, 1, 3), (2, 1, 1)) in rndf.exits
    zone = rndf.zones[3]
    assert len(zone.perimeter) == 4
    assert zone.spots[0].x == 60.0


def test_exit_to_missing_waypoint_names_line():
    bad = MINIMAL + "exit 1.1.2 9.9.9\n"
    with pytest.raises(RndfError) as e:
        parse_rndf(bad)
    assert "9.9.9" in str(e.value)
    assert "line 6" in str(e.value)


def test_unknown_keyword_rejected():
    with pytest.raises(RndfError) as e:
        parse_rndf(MINIMAL + "bogus 1 2\n")
    assert "bogus" in str(e.value)


def test_duplicate_checkpoint_rejected():
    bad = TWO_ROAD + "checkpoint 1.1.1 1\n"
    with pytest.raises(RndfError):
        parse_rndf(bad)


def test_single_waypoint_lane_rejected():
    with pytest.raises(RndfError):
        parse_rndf("segment 1\nlane 1.1 4.0\nwaypoint 1.1.1 0 0\n")


def random_rndf(rng) -> str:
    lines = []
    n_seg = int(rng.integers(1, 4))
    wp_counter = []
    for seg in range(1, n_seg + 1):
        lines.append(f"segment {seg}")
        for lane in range(1, int(rng.integers(1, 3)) + 1):
            width = float(rng.uniform(3, 6))
            lines.append(f"lane {seg}.{lane} {width}")
            n_wp = int(rng.integers(2, 6))
            x0, y0 = rng.uniform(-100, 100, size=2)
            for k in range(1, n_wp + 1):
                lines.append(f"waypoint {seg}.{lane}.{k} {x0 + 10 * k} {y0}")
                wp_counter.append((seg, lane, k))
    # a couple of valid exits
    for _ in range(2):
        a = wp_counter[int(rng.integers(0, len(wp_counter)))]
        b = wp_counter[int(rng.integers(0, len(wp_counter)))]
        lines.append(f"exit {a[0]}.{a[1]}.{a[2]} {b[0]}.{b[1]}.{b[2]}")
    lines.append(f"checkpoint {wp_counter[-1][0]}.{wp_counter[-1][1]}.{wp_counter[-1][2]} 1")
    return "\n".join(lines) + "\n"


def structurally_equal(a, b) -> bool:
    if set(a.lanes) != set(b.lanes) or a.exits != b.exits:
        return False
    for key in a.lanes:
        la, lb = a.lanes[key], b.lanes[key]
        if la.width != lb.width or len(la.waypoints) != len(lb.waypoints):
            return False
        for wa, wb in zip(la.waypoints, lb.waypoints):
            if (wa.id, wa.x, wa.y, wa.is_stop, wa.checkpoint) != \
               (wb.id, wb.x, wb.y, wb.is_stop, wb.checkpoint):
                return False
    if set(a.zones) != set(b.zones):
        return False
    for zid in a.zones:
        za, zb = a.zones[zid], b.zones[zid]
        if za.perimeter != zb.perimeter:
            return False
        if [(s.zone, s.spot, s.x, s.y, s.heading) for s in za.spots] != \
           [(s.zone, s.spot, s.x, s.y, s.heading) for s in zb.spots]:
            return False
    return True


def test_serialize_round_trip_corpus():
    rng = np.random.default_rng(13)
    for _ in range(20):
        text = random_rndf(rng)
        rndf = parse_rndf(text)
        again = parse_rndf(serialize_rndf(rndf))
        assert structurally_equal(rndf, again)
    # and the fixed fixture
    rndf = parse_rndf(TWO_ROAD)
    assert structurally_equal(rndf, parse_rndf(serialize_rndf(rndf)))


def test_shortest_path_uses_exits():
    rndf = parse_rndf(TWO_ROAD)
    path = shortest_path(rndf, (1, 1, 1), (2, 1, 2))
    assert path == [(1, 1, 1), (1, 1, 2), (1, 1, 3), (2, 1, 1), (2, 1, 2)]
    with pytest.raises(RouteError):
        shortest_path(rndf, (2, 1, 2), (2, 1, 1),
                      blocked={((2, 1, 2), (1, 1, 1)),
                               ((1, 1, 1), (1, 1, 2)),
                               ((1, 1, 2), (1, 1, 3)),
                               ((1, 1, 3), (2, 1, 1))})


def test_nearest_waypoint_heading_bias():
    rndf = parse_rndf(TWO_ROAD)
    # between the two antiparallel lanes: the heading disambiguates
    east = nearest_waypoint(rndf, 20.0, 2.0, heading=0.0)
    west = nearest_waypoint(rndf, 20.0, 2.0, heading=3.14159)
    assert east.id[0] == 1
    assert west.id[0] == 2


def test_route_plan_and_advance():
    rndf = parse_rndf(TWO_ROAD)
    mdf = MDF(checkpoints=[1])
    route = Route.plan(rndf, mdf, (0.0, 0.0), 0.0)
    assert route.waypoints[0].id == (1, 1, 1)
    assert route.waypoints[-1].id == (1, 1, 3)
    route.advance(0.0, 0.0)
    route.advance(20.0, 0.1)
    route.advance(40.0, 0.0)
    assert route.mission_complete()
    assert route.visited_checkpoints == [1]


def test_route_speed_limit():
    rndf = parse_rndf(TWO_ROAD)
    from drivesim.sim import SpeedLimit

    mdf = MDF(checkpoints=[1], speed_limits=[SpeedLimit(segment=1, max_mps=7.0)])
    route = Route.plan(rndf, mdf, (0.0, 0.0), 0.0)
    assert route.speed_limit() == 7.0
