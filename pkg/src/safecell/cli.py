"""Command line entry point: run scenarios, replay recordings, serve a console.

    safecell run --mode ar --scenario configs/engine_assembly.yaml \
                 --config configs/cell_default.yaml --seed 3 \
                 [--record out.depth] [--metrics out.csv] [--headless]
    safecell replay --stream out.depth --config configs/cell_default.yaml
    safecell serve --port 7700 --scenario configs/scenario_console_demo.yaml
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .configs import (
    CellConfig,
    default_cell_config,
    default_scenario,
    load_cell_config,
    load_scenario,
    with_overrides,
)
from .scenario import ScenarioEngine, replay_stream, run_scenario
from .server import SessionServer, realtime_pacer
from .simcell import read_depth_stream


def _load_config(path: str | None) -> CellConfig:
    return load_cell_config(path) if path else default_cell_config()


def _write_metrics(path: str, rows: list[dict]) -> None:
    out = Path(path)
    if out.suffix == ".json":
        out.write_text(json.dumps(rows if len(rows) > 1 else rows[0], indent=2) + "\n")
        return
    fields = ["run_id", "mode", "total_time_s", "robot_idle_time_s", "halts", "confirmations"]
    exists = out.exists()
    with out.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        if not exists:
            writer.writeheader()
        writer.writerows(rows)


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    script = load_scenario(args.scenario) if args.scenario else default_scenario()
    result = run_scenario(script, cfg, args.mode, args.seed, record_path=args.record)
    if not args.headless:
        for line in result.event_log:
            print(line)
        for line in result.verdict_log:
            print(line)
    row = result.metrics.as_row()
    print(
        f"run {row['run_id']}: total={row['total_time_s']:.1f}s "
        f"idle={row['robot_idle_time_s']:.1f}s halts={row['halts']} "
        f"confirmations={row['confirmations']}"
    )
    if args.metrics:
        _write_metrics(args.metrics, [row])
    return 0


def cmd_replay(args) -> int:
    cfg = _load_config(args.config)
    if cfg.scenario_path:
        script = load_scenario(cfg.scenario_path)
    else:
        script = default_scenario()
    try:
        width, height, frames = read_depth_stream(args.stream)
    except ValueError as e:
        partial = getattr(e, "frames", None)
        if partial is None:
            print(f"error: {e}", file=sys.stderr)
            return 2
        print(f"error: {e}; replaying the readable prefix", file=sys.stderr)
        frames = partial
    k = cfg.camera.intrinsics
    if frames and frames[0].shape != (k.height, k.width):
        print("error: stream size does not match the configured camera", file=sys.stderr)
        return 2
    m = cfg.monitor_params
    print(
        f"# replay stream={args.stream} frames={len(frames)} mode={cfg.mode} "
        f"seed={cfg.seed} depth_threshold_m={m.depth_threshold_m} "
        f"neighbor_radius_px={m.neighbor_radius_px} min_cluster_size={m.min_cluster_size}"
    )
    result = replay_stream(frames, script, cfg, cfg.mode, cfg.seed)
    if result.replay_truncated:
        print("# note: stream ended before the scenario completed; log is partial")
    for line in result.verdict_log:
        print(line)
    return 0


def cmd_serve(args) -> int:
    cfg = _load_config(args.config)
    script = load_scenario(args.scenario) if args.scenario else default_scenario()
    cfg = with_overrides(cfg, mode="ar")
    engine = ScenarioEngine(
        script,
        cfg,
        "ar",
        args.seed,
        simulated_buttons=False,  # the console operator presses the buttons
        pace_hook=realtime_pacer(args.speed),
    )
    server = SessionServer(args.host, args.port)
    server.attach_engine(engine)
    server.start()
    print(f"session service listening on {server.host}:{server.port}", flush=True)
    try:
        result = engine.run()  # a metrics frame is broadcast at completion
    except KeyboardInterrupt:
        print("interrupted")
        server.stop()
        return 130
    print(f"scenario complete: total={result.metrics.total_execution_time:.1f}s")
    server.flush()
    server.stop()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="safecell", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headless or verbose")
    p_run.add_argument("--mode", choices=("ar", "baseline"), required=True)
    p_run.add_argument("--scenario", required=True, help="scenario YAML file")
    p_run.add_argument("--config", required=True, help="cell config YAML file")
    p_run.add_argument("--seed", type=int, required=True)
    p_run.add_argument("--record", help="write the depth stream to this file")
    p_run.add_argument("--metrics", help="append metrics to this CSV (or .json) file")
    p_run.add_argument("--headless", action="store_true",
                       help="suppress event and verdict logs")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("replay", help="replay a recorded depth stream")
    p_rep.add_argument("--stream", required=True)
    p_rep.add_argument("--config", required=True,
                       help="cell config (supplies scenario, seed, monitor params)")
    p_rep.set_defaults(func=cmd_replay)

    p_srv = sub.add_parser("serve", help="interactive session for the console")
    p_srv.add_argument("--port", type=int, required=True)
    p_srv.add_argument("--scenario", required=True)
    p_srv.add_argument("--config", help="cell config YAML (defaults built in)")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--seed", type=int, default=0)
    p_srv.add_argument("--speed", type=float, default=1.0,
                       help="real-time pacing factor (2 = twice as fast)")
    p_srv.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
