#!/usr/bin/env python3
"""Paired shared-workspace vs. separated-baseline study over seeded runs.

Writes one CSV row per run and prints the mean reductions.

    python scripts/run_timing_study.py --config configs/cell_calibrated.yaml \
        --scenario configs/engine_assembly.yaml --seeds 20 --out study.csv
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from safecell.configs import load_cell_config, load_scenario
from safecell.scenario import run_scenario


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/cell_calibrated.yaml")
    ap.add_argument("--scenario", default="configs/engine_assembly.yaml")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--out", default="timing_study.csv")
    args = ap.parse_args()

    cfg = load_cell_config(args.config)
    script = load_scenario(args.scenario)

    rows = []
    total_red, idle_red = [], []
    for seed in range(args.seeds):
        ar = run_scenario(script, cfg, "ar", seed=seed).metrics
        base = run_scenario(script, cfg, "baseline", seed=seed).metrics
        rows.extend([ar.as_row(), base.as_row()])
        tr = (base.total_execution_time - ar.total_execution_time) / base.total_execution_time
        ir = (base.robot_idle_time - ar.robot_idle_time) / base.robot_idle_time
        total_red.append(tr)
        idle_red.append(ir)
        print(
            f"seed {seed:2d}: shared {ar.total_execution_time:6.1f}s/"
            f"{ar.robot_idle_time:5.1f}s  baseline {base.total_execution_time:6.1f}s/"
            f"{base.robot_idle_time:5.1f}s  reduction {tr*100:5.1f}% / {ir*100:5.1f}%"
        )

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["run_id", "mode", "total_time_s", "robot_idle_time_s",
                        "halts", "confirmations"],
        )
        writer.writeheader()
        writer.writerows(rows)
    print(
        f"\nmeans over {args.seeds} seeds: total time -{np.mean(total_red)*100:.1f}%, "
        f"robot idle time -{np.mean(idle_red)*100:.1f}%  (CSV: {args.out})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
