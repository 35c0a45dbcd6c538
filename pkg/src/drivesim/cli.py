"""Command line entry points: run, replay, validate-rndf, plot, serve."""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click

from .sim import MissionRunner, RndfError, parse_rndf, parse_scenario


@click.group()
def main():
    """Desk-scale driving stack simulator."""


def _load_scenario(path: str, seed: int | None):
    p = Path(path)
    scenario = parse_scenario(p.read_text(), base_dir=p.parent)
    if seed is not None:
        scenario.seed = seed
    return scenario


@main.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Write the mission report JSON here.")
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write the per-tick trace CSV here.")
def run(scenario, seed, report_path, trace_path):
    """Run a scenario headlessly and print the mission report."""
    sc = _load_scenario(scenario, seed)
    runner = MissionRunner(sc)
    report = runner.run()
    if report_path:
        Path(report_path).write_text(runner.report_json() + "\n")
    if trace_path:
        Path(trace_path).write_text(runner.trace_csv())
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    ok = report["completed"] and all(report["validator_summary"].values())
    sys.exit(0 if ok else 1)


def _read_trace(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {k: (v if k == "interrupt" else float(v)) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


@main.command()
@click.argument("trace", type=click.Path(exists=True))
def replay(trace):
    """Summarize a recorded trace."""
    rows = _read_trace(trace)
    if not rows:
        raise click.ClickException("trace is empty")
    dist = 0.0
    for a, b in zip(rows[:-1], rows[1:]):
        dist += ((b["x"] - a["x"]) ** 2 + (b["y"] - a["y"]) ** 2) ** 0.5
    interrupts = sorted({r["interrupt"] for r in rows if r["interrupt"]})
    summary = {
        "ticks": len(rows),
        "duration_s": rows[-1]["t"] - rows[0]["t"],
        "distance_m": round(dist, 2),
        "v_max": max(r["v"] for r in rows),
        "track_error_max": max(abs(r["d"]) for r in rows),
        "clearance_min": min(r["clearance"] for r in rows),
        "interrupts": interrupts,
        "throttle_brake_overlap": any(r["throttle"] * r["brake"] != 0 for r in rows),
    }
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@main.command("validate-rndf")
@click.argument("rndf", type=click.Path(exists=True))
def validate_rndf(rndf):
    """Parse and structurally validate a route network file."""
    try:
        parsed = parse_rndf(Path(rndf).read_text())
    except RndfError as e:
        click.echo(f"INVALID: {e}", err=True)
        sys.exit(1)
    n_wp = len(parsed.all_waypoints())
    click.echo(f"OK: {len(parsed.lanes)} lanes, {n_wp} waypoints, "
               f"{len(parsed.exits)} exits, {len(parsed.zones)} zones, "
               f"{len(parsed.checkpoints())} checkpoints")


@main.command()
@click.argument("trace", type=click.Path(exists=True))
@click.option("--metric", type=click.Choice(["d", "v", "clearance"]), required=True)
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Output image (default: <trace>.<metric>.png)")
def plot(trace, metric, output):
    """Plot one trace metric over time."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = _read_trace(trace)
    t = [r["t"] for r in rows]
    y = [r[metric] for r in rows]
    labels = {"d": "track error [m]", "v": "speed [m/s]", "clearance": "clearance [m]"}
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.plot(t, y, linewidth=1.0)
    ax.set_xlabel("t [s]")
    ax.set_ylabel(labels[metric])
    ax.grid(True, alpha=0.3)
    out = output or f"{trace}.{metric}.png"
    fig.savefig(out, dpi=120, bbox_inches="tight")
    click.echo(out)


@main.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--port", type=int, default=8700)
@click.option("--host", default="127.0.0.1")
@click.option("--pace/--no-pace", default=True,
              help="Pace the simulation against the wall clock.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Serve a built cockpit UI directory at /ui.")
def serve(scenario, port, host, pace, ui_dir):
    """Serve the cockpit stream for a scenario."""
    import uvicorn

    from .service.server import make_app_from_path

    app = make_app_from_path(scenario, pace=pace, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
