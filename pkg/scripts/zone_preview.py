#!/usr/bin/env python3
"""Render PGM snapshots of the zone masks and the depth view for one pose.

    python scripts/zone_preview.py --out-dir preview --q -1.3 -1.57 -2.0 3.57 -1.57 0
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from safecell.configs import default_cell_config
from safecell.simcell import DepthRenderer, chain_capsules, forward_kinematics, ur5_like_chain
from safecell.zones import build_zones, write_pgm


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs=6, default=None,
                    help="six joint angles in radians (default: home pose)")
    ap.add_argument("--out-dir", default="preview")
    args = ap.parse_args()

    cfg = default_cell_config(width=512, height=424)
    chain = ur5_like_chain(cfg.robot_base_xy)
    q = np.asarray(args.q if args.q is not None else cfg.q_home)
    frames, cps = forward_kinematics(chain, q)
    part = build_zones(cps, [], cfg.zone_params, cfg.camera)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(out / "zone_robot.pgm", part.robot)
    write_pgm(out / "zone_danger.pgm", part.danger)
    write_pgm(out / "zone_human.pgm", part.human)

    img = DepthRenderer(cfg.camera, cfg.table_z).render(chain_capsules(chain, frames))
    d = img.depth
    norm = ((d.max() - d) / max(d.max() - d.min(), 1e-6) * 255).astype(np.uint8)
    with open(out / "depth.pgm", "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode() + norm.tobytes())
    print(f"wrote zone and depth previews to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
