"""Interactive session state: UI buttons, phase machine, metrics, snapshots.

Phases: idle -> running via ENABLE+GO; any Halt verdict forces halted, which
only ENABLE+GO leaves; AwaitConfirmation forces awaiting_confirmation, which
only ENABLE+CONFIRM (covering all blocking region ids) leaves. STOP needs no
ENABLE: an emergency action must never be gated. Button events are queued
and applied at tick boundaries in timestamp order; the session runs on one
logical clock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .monitor import AwaitConfirmation, Halt, Monitor, Verdict
from .zones import ZonePartition, danger_boundary, zone_boundary

IDLE = "idle"
RUNNING = "running"
HALTED = "halted"
AWAITING = "awaiting_confirmation"
FORCE_GUIDE = "force_guide"

PHASES = (IDLE, RUNNING, HALTED, AWAITING, FORCE_GUIDE)

BUTTONS = ("GO", "STOP", "CONFIRM", "ENABLE")


@dataclass(frozen=True)
class ButtonEvent:
    button: str  # GO | STOP | CONFIRM | ENABLE
    edge: str  # press | release
    time: float
    source: str = "operator"

    def __post_init__(self):
        if self.button not in BUTTONS:
            raise ValueError(f"unknown button {self.button!r}")
        if self.edge not in ("press", "release"):
            raise ValueError(f"unknown edge {self.edge!r}")


@dataclass
class SessionState:
    mode: str = "ar"  # "ar" | "baseline"
    phase: str = IDLE
    current_task: int = 0
    pending_ids: tuple[int, ...] = ()
    enable_held: bool = False
    switch_held: bool = False  # baseline dead man's switch
    resume_phase: str = RUNNING

    def __post_init__(self):
        if self.mode not in ("ar", "baseline"):
            raise ValueError(f"unknown mode {self.mode!r}")


def handle_button(state: SessionState, event: ButtonEvent) -> list[tuple]:
    """Apply one button edge; returns effect tuples for the session to run.

    GO and CONFIRM only act while ENABLE is held (level-triggered); STOP is
    unconditional. Invalid sequences are no-ops that emit a warning effect.
    """
    effects: list[tuple] = []
    if event.edge == "release":
        if event.button == "ENABLE":
            state.enable_held = False
        return effects

    if event.button == "ENABLE":
        state.enable_held = True
    elif event.button == "STOP":
        if state.phase in (RUNNING, FORCE_GUIDE, AWAITING):
            state.resume_phase = FORCE_GUIDE if state.phase == FORCE_GUIDE else RUNNING
            state.phase = HALTED
            effects.append(("halted", "stop button"))
        else:
            effects.append(("warn", f"STOP has no effect in phase {state.phase}"))
    elif event.button == "GO":
        if not state.enable_held:
            effects.append(("warn", "GO ignored: ENABLE is not held"))
        elif state.phase == IDLE:
            state.phase = RUNNING
            effects.append(("started",))
        elif state.phase == HALTED:
            state.phase = state.resume_phase if state.resume_phase == FORCE_GUIDE else RUNNING
            effects.append(("resumed",))
        elif state.phase == AWAITING:
            effects.append(("warn", "GO ignored: confirmation required first"))
    elif event.button == "CONFIRM":
        if not state.enable_held:
            effects.append(("warn", "CONFIRM ignored: ENABLE is not held"))
        elif state.phase == AWAITING and state.pending_ids:
            effects.append(("confirm", state.pending_ids))
        else:
            effects.append(("warn", "CONFIRM ignored: nothing is blocking"))
    return effects


def apply_verdicts(state: SessionState, verdicts: list[Verdict]) -> list[tuple]:
    """Fold monitor verdicts into the phase machine (Halt dominates)."""
    effects: list[tuple] = []
    for v in verdicts:
        if isinstance(v, Halt):
            if state.phase != HALTED:
                state.resume_phase = FORCE_GUIDE if state.phase == FORCE_GUIDE else RUNNING
                state.phase = HALTED
                effects.append(("halt_entered", v))
        elif isinstance(v, AwaitConfirmation):
            if state.phase == AWAITING:
                merged = set(state.pending_ids) | set(v.region_ids)
                state.pending_ids = tuple(sorted(merged))
            elif state.phase != HALTED:
                state.resume_phase = FORCE_GUIDE if state.phase == FORCE_GUIDE else RUNNING
                state.pending_ids = tuple(sorted(v.region_ids))
                state.phase = AWAITING
                effects.append(("await_entered", v))
    return effects


def complete_confirmation(state: SessionState) -> None:
    """Leave awaiting_confirmation after the monitor accepted all ids."""
    state.pending_ids = ()
    if state.phase == AWAITING:
        state.phase = state.resume_phase


@dataclass
class MetricsReport:
    total_execution_time: float
    robot_idle_time: float
    halts: int
    confirmations: int
    mode: str = "ar"
    run_id: str = ""

    def __post_init__(self):
        if self.robot_idle_time > self.total_execution_time + 1e-9:
            raise ValueError("robot idle time cannot exceed total execution time")

    def as_row(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode,
            "total_time_s": round(self.total_execution_time, 6),
            "robot_idle_time_s": round(self.robot_idle_time, 6),
            "halts": self.halts,
            "confirmations": self.confirmations,
        }


STATUS_TEXT = {
    IDLE: "ready",
    RUNNING: "task {task} running",
    HALTED: "HALTED: clear the danger zone, then ENABLE+GO to resume",
    AWAITING: "changed regions {ids} block the path: ENABLE+CONFIRM to accept",
    FORCE_GUIDE: "hand-guidance active: position the part",
}


def status_text(state: SessionState) -> str:
    template = STATUS_TEXT[state.phase]
    return template.format(
        task=state.current_task or "-",
        ids=",".join(str(i) for i in state.pending_ids) or "-",
    )


def _polyline(poly: np.ndarray) -> list[list[float]]:
    return [[float(u), float(v)] for u, v in poly]


def build_snapshot(
    state: SessionState,
    frame_index: int,
    sim_time: float,
    partition: ZonePartition | None,
    monitor: Monitor | None,
    include_fence: bool = False,
    fence_mesh=None,
) -> dict:
    """One wire snapshot of everything the console renders."""
    snap = {
        "v": 1,
        "type": "snapshot",
        "frame": frame_index,
        "t": round(sim_time, 6),
        "mode": state.mode,
        "phase": state.phase,
        "task": state.current_task,
        "status": status_text(state),
        "buttons": {
            "enable_held": state.enable_held,
            "switch_held": state.switch_held,
        },
        "pending": [],
        "danger_boundary": [],
        "robot_hull": [],
    }
    if partition is not None:
        if partition.danger.any():
            snap["danger_boundary"] = _polyline(danger_boundary(partition))
        if partition.robot.any():
            snap["robot_hull"] = _polyline(zone_boundary(partition.robot))
    if monitor is not None:
        snap["pending"] = [
            {"id": r.id, "outline": _polyline(zone_boundary(r.mask))}
            for r in monitor.unverified_regions()
        ]
    if include_fence and fence_mesh is not None:
        snap["fence"] = [
            [[round(float(c), 6) for c in vert] for vert in tri]
            for tri in fence_mesh.triangles
        ]
    return snap
