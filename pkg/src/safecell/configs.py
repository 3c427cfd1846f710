"""Declarative configuration for the cell, operator, and assembly scenario.

Cell and scenario files are YAML; camera files use the plain key-value
format handled by :mod:`safecell.geometry`. Paths inside a YAML file are
resolved relative to that file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .geometry import CameraModel, load_camera_config, make_synthetic_camera
from .monitor import MonitorParams
from .zones import ZoneParams


@dataclass(frozen=True)
class OperatorAgent:
    """Simulated operator parameters: movement, work pace, UI reactions."""

    move_speed_mps: float = 1.0
    reaction_latency_s: float = 0.7
    work_xy: tuple[float, float] = (0.0, -0.5)
    rest_xy: tuple[float, float] = (0.0, -0.68)
    safe_xy: tuple[float, float] = (5.2, -0.5)
    guide_xy: tuple[float, float] = (0.0, -0.40)
    switch_settle_s: float = 2.0
    arm_radius_m: float = 0.05
    arm_shoulder_z: float = 0.12
    duration_jitter: float = 0.03
    work_durations: dict = field(default_factory=dict)  # per-task overrides

    def __post_init__(self):
        for name in ("move_speed_mps", "reaction_latency_s", "switch_settle_s",
                     "arm_radius_m", "arm_shoulder_z"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.duration_jitter < 0:
            raise ValueError("duration_jitter must be non-negative")


@dataclass(frozen=True)
class Task:
    id: int
    owner: str  # "H" | "R" | "H+R"
    duration_s: float
    after: int | None = None

    def __post_init__(self):
        if self.owner not in ("H", "R", "H+R"):
            raise ValueError(f"unknown task owner {self.owner!r}")
        if self.duration_s <= 0:
            raise ValueError("task duration must be positive")


@dataclass(frozen=True)
class Leftover:
    """Parts installed by a task that stay on the table afterwards."""

    after_task: int
    center_xy: tuple[float, float]
    size: tuple[float, float, float]


@dataclass(frozen=True)
class DangerEvent:
    """A scripted operator reach toward the robot during a task (AR mode)."""

    task: int
    at_frac: float
    duration_s: float
    kind: str = "reach_into_danger"


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    tasks: tuple[Task, ...]
    engine_xy: tuple[float, float] = (0.0, -0.12)
    task2_carry_size: tuple[float, float, float] = (0.16, 0.10, 0.05)
    task4_bring_s: float = 6.0
    task4_guide_s: float = 10.0
    task4_retract_s: float = 4.0
    task4_manual_s: float = 22.0
    task4_carry_size: tuple[float, float, float] = (0.30, 0.06, 0.06)
    leftovers: tuple[Leftover, ...] = ()
    events: tuple[DangerEvent, ...] = ()

    def __post_init__(self):
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate task ids")
        by_id = {t.id: t for t in self.tasks}
        for t in self.tasks:
            if t.after is not None and t.after not in by_id:
                raise ValueError(f"task {t.id} depends on unknown task {t.after}")
        # cycle check by chasing dependencies
        for t in self.tasks:
            seen = {t.id}
            cur = t.after
            while cur is not None:
                if cur in seen:
                    raise ValueError("task dependencies contain a cycle")
                seen.add(cur)
                cur = by_id[cur].after

    def ordered_tasks(self) -> list[Task]:
        by_id = {t.id: t for t in self.tasks}
        done: list[Task] = []
        remaining = dict(by_id)
        while remaining:
            progress = False
            for tid in sorted(remaining):
                t = remaining[tid]
                if t.after is None or t.after not in remaining:
                    done.append(t)
                    del remaining[tid]
                    progress = True
                    break
            if not progress:
                raise ValueError("task dependencies contain a cycle")
        return done


@dataclass(frozen=True)
class CellConfig:
    camera: CameraModel
    zone_params: ZoneParams
    monitor_params: MonitorParams
    operator: OperatorAgent
    table_z: float = 0.0
    sensor_rate_hz: float = 10.0
    noise_sigma_m: float = 0.0
    snapshot_rate_hz: float = 20.0
    robot_base_xy: tuple[float, float] = (0.0, 0.35)
    q_home: tuple[float, ...] = (-2.094, -0.262, -1.75, 2.012, -1.571, 0.0)
    q_engine: tuple[float, ...] = (-1.309, -1.571, -2.0, 3.571, -1.571, 0.0)
    baseline_min_distance_m: float = 4.0
    max_sim_time_s: float = 900.0
    scenario_path: str | None = None
    seed: int = 0
    mode: str = "ar"

    def __post_init__(self):
        if self.sensor_rate_hz <= 0 or self.snapshot_rate_hz <= 0:
            raise ValueError("rates must be positive")
        if self.noise_sigma_m < 0:
            raise ValueError("noise sigma must be non-negative")


def default_scenario() -> ScenarioScript:
    """The five sub-task engine assembly used throughout."""
    return ScenarioScript(
        name="engine-assembly",
        tasks=(
            Task(1, "H", 20.0, None),
            Task(2, "R", 18.0, 1),
            Task(3, "H", 12.0, 2),
            Task(4, "H+R", 20.0, 3),
            Task(5, "H", 10.0, 4),
        ),
        leftovers=(Leftover(after_task=1, center_xy=(0.18, -0.30), size=(0.14, 0.08, 0.08)),),
        events=(DangerEvent(task=2, at_frac=0.35, duration_s=1.5),),
    )


def default_cell_config(width: int = 128, height: int = 106) -> CellConfig:
    # Zone radii must cover the widest projected robot capsule (upper arm,
    # 6.5 cm, seen from ~1.3 m) plus center rounding and per-tick motion,
    # or the robot's own movement would leak past its zone and self-halt.
    fov = 2.0 * math.atan(1.0 / 2.0)
    return CellConfig(
        camera=make_synthetic_camera(2.0, width, height, fov),
        zone_params=ZoneParams(region_radius_px=max(3, round(width * 36 / 512)),
                               margin_px=max(2, round(width * 24 / 512))),
        monitor_params=MonitorParams(),
        operator=OperatorAgent(),
    )


def _pair(v) -> tuple[float, float]:
    a, b = v
    return float(a), float(b)


def _triple(v) -> tuple[float, float, float]:
    a, b, c = v
    return float(a), float(b), float(c)


def load_scenario(path) -> ScenarioScript:
    path = Path(path)
    raw = yaml.safe_load(path.read_text())
    tasks = tuple(
        Task(int(t["id"]), str(t["owner"]), float(t["duration_s"]),
             None if t.get("after") is None else int(t["after"]))
        for t in raw["tasks"]
    )
    t2 = raw.get("task2", {})
    t4 = raw.get("task4", {})
    return ScenarioScript(
        name=str(raw.get("name", path.stem)),
        tasks=tasks,
        engine_xy=_pair(raw.get("engine_xy", (0.0, -0.12))),
        task2_carry_size=_triple(t2.get("carry_size", (0.16, 0.10, 0.05))),
        task4_bring_s=float(t4.get("bring_s", 6.0)),
        task4_guide_s=float(t4.get("guide_s", 10.0)),
        task4_retract_s=float(t4.get("retract_s", 4.0)),
        task4_manual_s=float(t4.get("manual_s", 22.0)),
        task4_carry_size=_triple(t4.get("carry_size", (0.30, 0.06, 0.06))),
        leftovers=tuple(
            Leftover(int(l["after_task"]), _pair(l["center_xy"]), _triple(l["size"]))
            for l in raw.get("leftovers", ())
        ),
        events=tuple(
            DangerEvent(int(e["task"]), float(e["at_frac"]), float(e["duration_s"]),
                        str(e.get("kind", "reach_into_danger")))
            for e in raw.get("events", ())
        ),
    )


def load_cell_config(path) -> CellConfig:
    path = Path(path)
    raw = yaml.safe_load(path.read_text())

    cam_spec = raw.get("camera", {})
    if "file" in cam_spec:
        camera = load_camera_config(path.parent / cam_spec["file"])
    else:
        syn = cam_spec.get("synthetic", {})
        fov = math.radians(float(syn.get("fov_deg", 53.13)))
        camera = make_synthetic_camera(
            float(syn.get("height_m", 2.0)),
            int(syn.get("width", 512)),
            int(syn.get("height", 424)),
            fov,
        )

    z = raw.get("zones", {})
    zone_params = ZoneParams(
        region_radius_px=int(z.get("region_radius_px", 20)),
        margin_px=int(z.get("margin_px", 15)),
        fence_height_m=float(z.get("fence_height_m", 1.0)),
    )
    m = raw.get("monitor", {})
    monitor_params = MonitorParams(
        depth_threshold_m=float(m.get("depth_threshold_m", 0.05)),
        neighbor_radius_px=float(m.get("neighbor_radius_px", 1.5)),
        min_cluster_size=int(m.get("min_cluster_size", 8)),
    )
    o = raw.get("operator", {})
    operator = OperatorAgent(
        move_speed_mps=float(o.get("move_speed_mps", 1.0)),
        reaction_latency_s=float(o.get("reaction_latency_s", 0.7)),
        work_xy=_pair(o.get("work_xy", (0.0, -0.5))),
        rest_xy=_pair(o.get("rest_xy", (0.0, -0.68))),
        safe_xy=_pair(o.get("safe_xy", (5.2, -0.5))),
        guide_xy=_pair(o.get("guide_xy", (0.0, -0.40))),
        switch_settle_s=float(o.get("switch_settle_s", 2.0)),
        arm_radius_m=float(o.get("arm_radius_m", 0.05)),
        arm_shoulder_z=float(o.get("arm_shoulder_z", 0.12)),
        duration_jitter=float(o.get("duration_jitter", 0.03)),
        work_durations={int(k): float(v) for k, v in o.get("work_durations", {}).items()},
    )
    sensor = raw.get("sensor", {})
    robot = raw.get("robot", {})
    scenario_path = raw.get("scenario")
    if scenario_path is not None:
        scenario_path = str(path.parent / scenario_path)
    return CellConfig(
        camera=camera,
        zone_params=zone_params,
        monitor_params=monitor_params,
        operator=operator,
        table_z=float(raw.get("table_z", 0.0)),
        sensor_rate_hz=float(sensor.get("rate_hz", 10.0)),
        noise_sigma_m=float(sensor.get("noise_sigma_m", 0.0)),
        snapshot_rate_hz=float(raw.get("snapshot_rate_hz", 20.0)),
        robot_base_xy=_pair(robot.get("base_xy", (0.0, 0.35))),
        q_home=tuple(float(x) for x in robot.get(
            "q_home", (-2.094, -0.262, -1.75, 2.012, -1.571, 0.0))),
        q_engine=tuple(float(x) for x in robot.get(
            "q_engine", (-1.309, -1.571, -2.0, 3.571, -1.571, 0.0))),
        baseline_min_distance_m=float(raw.get("baseline_min_distance_m", 4.0)),
        max_sim_time_s=float(raw.get("max_sim_time_s", 900.0)),
        scenario_path=scenario_path,
        seed=int(raw.get("seed", 0)),
        mode=str(raw.get("mode", "ar")),
    )


def with_overrides(cfg: CellConfig, **kw) -> CellConfig:
    return replace(cfg, **kw)
