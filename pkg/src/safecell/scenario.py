"""Scenario engine: runs the five-task assembly in shared (ar) or
separated (baseline) mode with a simulated operator, producing timing
metrics, an event log, and the monitor's verdict log.

The engine owns one logical clock (tick = 1/sensor rate). Every tick:
queued button events are applied in timestamp order, motion gating is
decided, the cell advances, a depth frame is rendered (ar), the monitor
evaluates it, and verdicts drive the session phase machine. Identical
seed + scenario + config produce bit-identical depth streams, verdict
logs, and metrics.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .configs import CellConfig, OperatorAgent, ScenarioScript
from .geometry import DepthImage
from .monitor import Monitor
from .session import (
    AWAITING,
    FORCE_GUIDE,
    HALTED,
    RUNNING,
    ButtonEvent,
    MetricsReport,
    SessionState,
    apply_verdicts,
    build_snapshot,
    complete_confirmation,
    handle_button,
)
from .simcell import (
    CellSim,
    DepthRenderer,
    DepthStreamWriter,
    Trajectory,
    box_at,
    capsule_between,
    ur5_like_chain,
)
from .zones import (
    ControlPointSet,
    ZonePartition,
    build_fence_mesh,
    build_zones,
    danger_boundary,
)


@dataclass
class PhaseSpec:
    """One sequential slice of a task with its owner-side mechanics."""

    task_id: int
    kind: str  # "work" | "robot" | "hold" | "guide"
    label: str
    duration_s: float
    station: str  # operator target: "work" | "rest" | "safe" | "guide"
    hand_target: str = "rest"  # "rest" | "work" | "gripper"
    trajectory: Trajectory | None = None
    attach_size: tuple[float, float, float] | None = None
    release_at_frac: float | None = None
    release_end: bool = False
    couple_arm: bool = False


def _jittered(rng: np.random.Generator, base: float, rel_sigma: float) -> float:
    if rel_sigma <= 0:
        return base
    f = 1.0 + float(np.clip(rel_sigma * rng.standard_normal(), -2.5 * rel_sigma, 2.5 * rel_sigma))
    return base * f


def compile_phases(
    script: ScenarioScript,
    mode: str,
    cfg: CellConfig,
    rng: np.random.Generator,
) -> list[PhaseSpec]:
    """Expand tasks into ordered phases for the requested mode.

    Collaborative task phases differ by mode: shared mode hand-guides the
    part into place (engage / guide / disengage around the hold), while the
    baseline has the robot merely deliver the part for a fully manual
    insertion.
    """
    q_home = np.asarray(cfg.q_home)
    q_eng = np.asarray(cfg.q_engine)
    sweep = Trajectory([0.0, 0.5, 1.0], [q_home, q_eng, q_home])
    to_engine = Trajectory([0.0, 1.0], [q_home, q_eng])
    to_home = Trajectory([0.0, 1.0], [q_eng, q_home])
    robot_station = "rest" if mode == "ar" else "safe"
    jitter = cfg.operator.duration_jitter

    def dur(base: float) -> float:
        return max(0.5, _jittered(rng, base, jitter))

    phases: list[PhaseSpec] = []
    for task in script.ordered_tasks():
        base = cfg.operator.work_durations.get(task.id, task.duration_s)
        if task.owner == "H":
            phases.append(
                PhaseSpec(task.id, "work", f"task {task.id} (H)", dur(base), "work",
                          hand_target="work")
            )
        elif task.owner == "R":
            phases.append(
                PhaseSpec(
                    task.id,
                    "robot",
                    f"task {task.id} (R)",
                    dur(base),
                    robot_station,
                    trajectory=sweep,
                    attach_size=script.task2_carry_size,
                    release_at_frac=0.5,
                )
            )
        else:  # H+R collaborative
            bring = PhaseSpec(
                task.id,
                "robot",
                f"task {task.id} bring (R)",
                dur(script.task4_bring_s),
                robot_station,
                trajectory=to_engine,
                attach_size=script.task4_carry_size,
            )
            retract = PhaseSpec(
                task.id,
                "robot",
                f"task {task.id} retract (R)",
                dur(script.task4_retract_s),
                robot_station,
                trajectory=to_home,
            )
            if mode == "ar":
                # The forearm only joins the robot's zone while the body stands
                # still: a walking body would drag the zone hull's rear edge
                # off freshly absorbed arm pixels and strand phantoms in the
                # danger ring. Approach and withdrawal therefore happen with
                # the hand drawn back and the arm uncoupled.
                phases.extend(
                    [
                        bring,
                        PhaseSpec(task.id, "hold", f"task {task.id} approach", 1.0,
                                  "guide", hand_target="retreat"),
                        PhaseSpec(task.id, "hold", f"task {task.id} engage", 1.0,
                                  "guide", hand_target="gripper", couple_arm=True),
                        PhaseSpec(task.id, "guide", f"task {task.id} hand-guide (H+R)",
                                  dur(script.task4_guide_s), "guide",
                                  hand_target="gripper", couple_arm=True,
                                  release_end=True),
                        PhaseSpec(task.id, "hold", f"task {task.id} disengage", 1.0,
                                  "guide", hand_target="retreat", couple_arm=True),
                        PhaseSpec(task.id, "hold", f"task {task.id} withdraw", 1.0,
                                  "rest", hand_target="retreat"),
                        retract,
                    ]
                )
            else:
                bring.release_end = True  # part is only delivered
                phases.extend(
                    [
                        bring,
                        retract,
                        PhaseSpec(task.id, "work", f"task {task.id} manual insert (H)",
                                  dur(script.task4_manual_s), "work",
                                  hand_target="work"),
                    ]
                )
    return phases


class OperatorSim:
    """Runtime operator: walks between stations, works, reacts to prompts.

    Physical actions (position, forearm) are always simulated; button
    presses are only generated when ``press_buttons`` is set, so a live
    console can take the operator role instead.
    """

    PRESS_GAP = 0.15
    RELEASE_GAP = 0.35

    HAND_SPEED = 0.8  # m/s

    def __init__(self, agent: OperatorAgent, mode: str, press_buttons: bool = True):
        self.agent = agent
        self.mode = mode
        self.press_buttons = press_buttons
        self.position = np.array(agent.work_xy, dtype=float)
        self.stations = {
            "work": np.array(agent.work_xy),
            "rest": np.array(agent.rest_xy),
            "safe": np.array(agent.safe_xy),
            "guide": np.array(agent.guide_xy),
        }
        self.station = "work"
        self.hand = self._resting_hand()  # stateful: never teleports
        self.hand_settled = True
        self.retreating = False
        self.switch_intent = False
        self._switch_at: float | None = None
        self._start_scheduled = False
        self._halt_press_at: float | None = None
        self._confirm_press_at: float | None = None
        self.reach: tuple[float, float, np.ndarray, np.ndarray] | None = None
        # (start, duration, from_xy, to_xy)

    # -- movement ---------------------------------------------------------

    def set_station(self, name: str) -> None:
        self.station = name

    def at_station(self) -> bool:
        return bool(np.all(self.position == self.stations[self.station]))

    def _move(self, dt: float) -> None:
        target = self.stations[self.station]
        delta = target - self.position
        dist = float(np.hypot(delta[0], delta[1]))
        step = self.agent.move_speed_mps * dt
        if dist <= step:
            self.position = target.copy()
        else:
            self.position = self.position + delta * (step / dist)

    # -- per-tick planning ---------------------------------------------------

    def update(
        self,
        t: float,
        dt: float,
        state: SessionState,
        queue: list,
        arm_coupled: bool = False,
    ) -> None:
        a = self.agent
        if state.phase == AWAITING and not arm_coupled:
            # pull the hand back before confirming: only static changes
            # should be absorbed into the model, never the operator's arm
            self.retreating = True
        elif state.phase != AWAITING:
            self.retreating = False
        if self.press_buttons and self.mode == "ar":
            if not self._start_scheduled:
                self._schedule_pair(queue, t + a.reaction_latency_s, "GO")
                self._start_scheduled = True
            if state.phase == HALTED:
                if self._halt_press_at is None:
                    ready = t + a.reaction_latency_s
                    if self.reach is not None:
                        start, duration, _, _ = self.reach
                        ready = max(ready, start + duration + 0.3)
                    self._schedule_pair(queue, ready, "GO")
                    self._halt_press_at = ready
            else:
                self._halt_press_at = None
            if state.phase == AWAITING and (not self.retreating or self.hand_retreated()):
                # re-issue if a fresh blockage appears right after a confirm
                stale = (
                    self._confirm_press_at is not None
                    and t > self._confirm_press_at + self.RELEASE_GAP + dt
                )
                if self._confirm_press_at is None or stale:
                    at = t + a.reaction_latency_s
                    self._schedule_pair(queue, at, "CONFIRM")
                    self._confirm_press_at = at
            elif state.phase != AWAITING:
                self._confirm_press_at = None
        self._move(dt)
        if self.reach is not None and t > self.reach[0] + self.reach[1]:
            self.reach = None

    def _schedule_pair(self, queue: list, at: float, action: str) -> None:
        queue.append(ButtonEvent("ENABLE", "press", at))
        queue.append(ButtonEvent(action, "press", at + self.PRESS_GAP))
        queue.append(ButtonEvent("ENABLE", "release", at + self.RELEASE_GAP))

    def update_switch(self, t: float, robot_phase_active: bool) -> None:
        """Baseline dead man's switch: held a settle time after arriving."""
        if robot_phase_active and self.station == "safe" and self.at_station():
            if self._switch_at is None:
                self._switch_at = t + self.agent.switch_settle_s
            self.switch_intent = t >= self._switch_at
        else:
            self._switch_at = None
            self.switch_intent = False

    # -- forearm ------------------------------------------------------------

    def start_reach(self, t: float, duration: float, target_xy) -> None:
        self.reach = (t, duration, self.hand.copy(), np.asarray(target_xy, float))

    def _resting_hand(self) -> np.ndarray:
        return self.position + np.array([0.0, 0.12])

    def retreat_target(self) -> np.ndarray:
        return self.position + np.array([0.0, -0.25])

    def hand_retreated(self) -> bool:
        d = self.hand - self.retreat_target()
        return float(np.hypot(d[0], d[1])) < 0.02

    def hand_wiggle(self, t: float, work_point) -> np.ndarray:
        wiggle = 0.05 * np.array([np.cos(1.3 * t), np.sin(0.9 * t)])
        return np.asarray(work_point, float) + wiggle

    def step_hand(self, t: float, dt: float, target_xy) -> None:
        """Move the hand toward its target; a scripted reach overrides it."""
        if self.reach is not None:
            start, duration, src, dst = self.reach
            f = float(np.clip((t - start) / (duration / 2.0), 0.0, 2.0))
            f = f if f <= 1.0 else 2.0 - f  # out and back
            self.hand = src + f * (dst - src)
            self.hand_settled = False
            return
        target = np.asarray(target_xy, float)
        delta = target - self.hand
        dist = float(np.hypot(delta[0], delta[1]))
        step = self.HAND_SPEED * dt
        if dist <= step:
            self.hand = target.copy()
            self.hand_settled = True
        else:
            self.hand = self.hand + delta * (step / dist)
            self.hand_settled = False

    def arm_primitive(self):
        a = self.agent
        shoulder = np.array([self.position[0], self.position[1], a.arm_shoulder_z])
        hand = np.array([self.hand[0], self.hand[1], 0.10])
        return capsule_between(shoulder, hand, a.arm_radius_m, tag="intrusion"), shoulder, hand


@dataclass
class RunResult:
    metrics: MetricsReport
    event_log: list[str]
    verdict_log: list[str]
    stream_sha256: str
    frames: int
    state: SessionState
    replay_truncated: bool = False


class ScenarioEngine:
    """Drives one scenario run; see the module docstring for tick order."""

    def __init__(
        self,
        script: ScenarioScript,
        cfg: CellConfig,
        mode: str,
        seed: int,
        record_path=None,
        replay_frames: list[np.ndarray] | None = None,
        simulated_buttons: bool = True,
        snapshot_hook=None,
        pace_hook=None,
    ):
        if mode not in ("ar", "baseline"):
            raise ValueError(f"unknown mode {mode!r}")
        self.script = script
        self.cfg = cfg
        self.mode = mode
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.phases = compile_phases(script, mode, cfg, self.rng)
        self.dt = 1.0 / cfg.sensor_rate_hz
        self.chain = ur5_like_chain(cfg.robot_base_xy)
        self.sim = CellSim(self.chain, np.asarray(cfg.q_home), cfg.table_z)
        self.operator = OperatorSim(cfg.operator, mode, press_buttons=simulated_buttons)
        self.state = SessionState(mode=mode)
        if mode == "baseline":
            self.state.phase = RUNNING  # no UI in the baseline
        self.button_queue: list[ButtonEvent] = []
        self._queue_lock = threading.Lock()
        self.now = 0.0
        self.event_log: list[str] = []
        self.record_path = record_path
        self.replay_frames = replay_frames
        self.snapshot_hook = snapshot_hook
        self.wire_hook = None
        self.pace_hook = pace_hook
        self.include_fence = False
        self._snapshot_every = max(1, round(cfg.sensor_rate_hz / cfg.snapshot_rate_hz))
        self._needs_pipeline = mode == "ar"
        self._renders = self._needs_pipeline or record_path is not None

        self.renderer = DepthRenderer(cfg.camera, cfg.table_z) if self._renders else None
        self.monitor: Monitor | None = None
        self.last_frame: DepthImage | None = None
        self.partition: ZonePartition | None = None
        self._zone_key: bytes | None = None
        self.halts = 0
        self.confirmations = 0
        self.idle_ticks = 0
        self._stream_hash = hashlib.sha256()
        self._frames = 0
        self.replay_truncated = False
        self._events_fired: set[int] = set()
        self.stop_requested = False

    # -- helpers -----------------------------------------------------------------

    def _log(self, t: float, text: str) -> None:
        self.event_log.append(f"t={t:8.3f} {text}")

    def queue_button(self, ev: ButtonEvent, stamp_arrival: bool = False) -> None:
        """Queue a button edge for the next tick boundary.

        Network clients are stamped with arrival sim-time so ordering
        follows the session clock rather than remote clocks.
        """
        if stamp_arrival:
            ev = dc_replace(ev, time=self.now)
        with self._queue_lock:
            self.button_queue.append(ev)

    def _pop_due_buttons(self, t: float) -> list[ButtonEvent]:
        with self._queue_lock:
            due = [ev for ev in self.button_queue if ev.time <= t + 1e-12]
            if not due:
                return []
            due.sort(key=lambda e: e.time)
            self.button_queue = [ev for ev in self.button_queue if ev.time > t + 1e-12]
        return due

    def _distance_to_robot(self) -> float:
        pts = self.sim.control_points.points[:, :2]
        d = pts - self.operator.position[None, :]
        return float(np.min(np.hypot(d[:, 0], d[:, 1])))

    def _hand_target(self, t: float, ph: PhaseSpec, working: bool) -> np.ndarray:
        if self.operator.retreating or ph.hand_target == "retreat":
            # hand drawn back past the body, out of the monitored area, so
            # the operator's own transient regions clear before they confirm
            return self.operator.retreat_target()
        if ph.hand_target == "gripper":
            g = self.sim.gripper_frame.translation
            return np.array([g[0], g[1] - 0.10])
        if ph.hand_target == "work" and working:
            work_point = (self.script.engine_xy[0], self.script.engine_xy[1] - 0.08)
            return self.operator.hand_wiggle(t, work_point)
        return self.operator._resting_hand()

    def _scene(self, t: float, dt: float, ph: PhaseSpec, working: bool):
        self.operator.step_hand(t, dt, self._hand_target(t, ph, working))
        prims = self.sim.scene_primitives()
        arm, shoulder, hand = self.operator.arm_primitive()
        if self.mode == "ar":
            prims.append(arm)
        return prims, shoulder, hand

    def _partition_for(self, shoulder, hand, couple_arm: bool) -> ZonePartition:
        objects = []
        obj_cp = self.sim.object_control_points()
        key_parts = [self.sim.q.tobytes()]
        if obj_cp is not None:
            objects.append(obj_cp)
            key_parts.append(obj_cp.points.tobytes())
        if couple_arm:
            arm_cp = ControlPointSet(np.stack([shoulder, hand]), label="object")
            objects.append(arm_cp)
            key_parts.append(arm_cp.points.tobytes())
        key = b"|".join(key_parts)
        if key != self._zone_key or self.partition is None:
            self.partition = build_zones(
                self.sim.control_points, objects, self.cfg.zone_params, self.cfg.camera
            )
            self._zone_key = key
        return self.partition

    def _render(self, n: int, prims) -> DepthImage:
        if self.replay_frames is not None:
            if n >= len(self.replay_frames):
                raise _ReplayExhausted()
            k = self.cfg.camera.intrinsics
            return DepthImage(k.width, k.height, self.replay_frames[n], n)
        frame = self.renderer.render(prims, n)
        if self.cfg.noise_sigma_m > 0:
            noise = self.rng.normal(0.0, self.cfg.noise_sigma_m, frame.depth.shape)
            noisy = frame.depth.copy()
            nz = noisy > 0
            noisy[nz] = np.maximum(noisy[nz] + noise[nz].astype(np.float32), 1e-4)
            frame = DepthImage(frame.width, frame.height, noisy, n)
        return frame

    # -- the run loop ---------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        dt = self.dt
        writer = None
        if self.record_path is not None:
            k = cfg.camera.intrinsics
            writer = DepthStreamWriter(self.record_path, k.width, k.height)
        try:
            return self._run_loop(writer)
        finally:
            if writer is not None:
                writer.close()

    def _run_loop(self, writer) -> RunResult:
        cfg, dt = self.cfg, self.dt
        phase_idx = 0
        phase_elapsed = 0.0
        phase_initialized = False
        released = False
        task_done_logged: set[int] = set()
        n = 0
        end_time = 0.0

        # The workspace model is captured before the operator enters the
        # cell (robot parked, table clear); her arm then shows up as an
        # ordinary human-zone change instead of leaving stale imprints.
        if self._needs_pipeline:
            model = self.renderer.render(self.sim.scene_primitives(), 0)
            self.monitor = Monitor(model, cfg.monitor_params)
        self.state.current_task = self.phases[0].task_id

        while phase_idx < len(self.phases) and not self.stop_requested:
            t = n * dt
            self.now = t
            if t > cfg.max_sim_time_s:
                raise RuntimeError(f"scenario exceeded max_sim_time_s at t={t:.1f}")
            ph = self.phases[phase_idx]

            if not phase_initialized:
                self._init_phase(t, ph)
                phase_elapsed = 0.0
                released = False
                phase_initialized = True

            # 1. operator planning and movement, then queued button events
            self.operator.update(t, dt, self.state, self.button_queue,
                                 arm_coupled=ph.couple_arm)
            for ev in self._pop_due_buttons(t):
                self._apply_button(t, ev)
            if self.mode == "baseline":
                self.operator.update_switch(t, ph.kind == "robot")
                self.state.switch_held = self.operator.switch_intent

            # 2. guide-phase session state
            if (
                ph.kind == "guide"
                and self.state.phase == RUNNING
                and self.operator.at_station()
                and self.operator.hand_settled
            ):
                self.state.phase = FORCE_GUIDE
                self._log(t, f"hand-guidance engaged ({ph.label})")

            # 3. motion gating
            traj_active = ph.kind == "robot" and not self.sim.trajectory_done()
            if self.mode == "ar":
                robot_moving = traj_active and self.state.phase == RUNNING
            else:
                guard_ok = (
                    self._distance_to_robot() >= cfg.baseline_min_distance_m
                    and self.state.switch_held
                )
                robot_moving = traj_active and guard_ok
            assert not (robot_moving and self.state.phase in (HALTED, AWAITING)), (
                "motion while halted/awaiting"
            )
            if self.mode == "baseline" and robot_moving:
                assert self._distance_to_robot() >= cfg.baseline_min_distance_m
                assert self.state.switch_held

            # 4. advance the cell
            self.sim.step(dt, robot_moving=robot_moving)
            if (
                ph.release_at_frac is not None
                and not released
                and self.sim.carried is not None
                and ph.trajectory is not None
                and self.sim.traj_clock >= ph.release_at_frac * self.sim.trajectory.duration
            ):
                self.sim.release_object(leave_in_scene=True)
                released = True
                self._log(t, f"part placed ({ph.label})")

            # 5. trigger scripted reach events
            if ph.kind == "robot" and self.mode == "ar":
                for i, ev in enumerate(self.script.events):
                    if i in self._events_fired or ev.task != ph.task_id:
                        continue
                    if self.sim.traj_clock >= ev.at_frac * ph.duration_s:
                        g = self.sim.gripper_frame.translation
                        self.operator.start_reach(t, ev.duration_s, (g[0], g[1]))
                        self._events_fired.add(i)
                        self._log(t, f"operator reaches toward the robot (task {ph.task_id})")

            # 6. sense + monitor
            working = ph.kind == "work" and self.operator.at_station() and self.state.phase not in (HALTED, AWAITING)
            if self._renders:
                prims, shoulder, hand = self._scene(t, dt, ph, working)
                frame = self._render(n, prims)
                self.last_frame = frame
                if writer is not None and self.replay_frames is None:
                    writer.append(frame)
                self._stream_hash.update(frame.depth.tobytes())
                self._frames += 1
                if self._needs_pipeline:
                    partition = self._partition_for(shoulder, hand, ph.couple_arm)
                    verdicts = self.monitor.evaluate_frame(frame, partition)
                    for effect in apply_verdicts(self.state, verdicts):
                        if effect[0] == "halt_entered":
                            self.halts += 1
                            self._log(t, f"HALT: danger-zone change (task {ph.task_id})")
                        elif effect[0] == "await_entered":
                            ids = ",".join(map(str, effect[1].region_ids))
                            self._log(t, f"awaiting confirmation of regions [{ids}]")

            # 7. phase progress
            progressed = False
            if ph.kind == "work":
                if working:
                    phase_elapsed += dt
                    progressed = True
                done = phase_elapsed >= ph.duration_s - 1e-9
            elif ph.kind == "robot":
                progressed = robot_moving
                done = self.sim.trajectory_done()
            elif ph.kind == "guide":
                if self.state.phase == FORCE_GUIDE and self.operator.at_station():
                    phase_elapsed += dt
                    progressed = True
                done = phase_elapsed >= ph.duration_s - 1e-9
            else:  # hold: waiting for the operator's body and hand to arrive
                done = self.operator.at_station() and self.operator.hand_settled

            # 8. robot idle accounting: a robot-side phase not progressing
            if ph.kind in ("robot", "hold", "guide") and not progressed and not done:
                self.idle_ticks += 1

            # 9. snapshots and pacing
            if self.snapshot_hook is not None and n % self._snapshot_every == 0:
                self.snapshot_hook(self._snapshot(n, t))
            if self.pace_hook is not None:
                self.pace_hook(t)

            n += 1
            end_time = n * dt

            if done:
                if ph.release_end and self.sim.carried is not None:
                    self.sim.release_object(leave_in_scene=True)
                    self._log(t, f"part placed ({ph.label})")
                if ph.kind == "guide" and self.state.phase == FORCE_GUIDE:
                    self.state.phase = RUNNING
                    self._log(t, "hand-guidance complete")
                self._log(t, f"phase complete: {ph.label}")
                last_of_task = (
                    phase_idx + 1 >= len(self.phases)
                    or self.phases[phase_idx + 1].task_id != ph.task_id
                )
                if last_of_task and ph.task_id not in task_done_logged:
                    task_done_logged.add(ph.task_id)
                    self._spawn_leftovers(t, ph.task_id)
                    self._log(t, f"task {ph.task_id} complete")
                phase_idx += 1
                phase_initialized = False
                if phase_idx < len(self.phases):
                    self.state.current_task = self.phases[phase_idx].task_id

        total = end_time
        metrics = MetricsReport(
            total_execution_time=total,
            robot_idle_time=self.idle_ticks * dt,
            halts=self.halts,
            confirmations=self.confirmations,
            mode=self.mode,
            run_id=f"{self.mode}-seed{self.seed}",
        )
        if self.wire_hook is not None:
            self.wire_hook({"v": 1, "type": "metrics", **metrics.as_row()})
        verdict_log = list(self.monitor.log) if self.monitor is not None else []
        return RunResult(
            metrics=metrics,
            event_log=self.event_log,
            verdict_log=verdict_log,
            stream_sha256=self._stream_hash.hexdigest(),
            frames=self._frames,
            state=self.state,
            replay_truncated=self.replay_truncated,
        )

    # -- phase bookkeeping ------------------------------------------------------------

    def _init_phase(self, t: float, ph: PhaseSpec) -> None:
        self.operator.set_station(ph.station)
        if ph.kind == "robot":
            traj = ph.trajectory.scaled_to(ph.duration_s)
            self.sim.set_trajectory(traj)
            if ph.attach_size is not None:
                self.sim.attach_object(ph.attach_size)
        else:
            self.sim.set_trajectory(None)
        self._log(t, f"phase start: {ph.label}")

    def _spawn_leftovers(self, t: float, task_id: int) -> None:
        for leftover in self.script.leftovers:
            if leftover.after_task == task_id:
                cx, cy = leftover.center_xy
                sz = leftover.size
                self.sim.statics.append(
                    box_at([cx, cy, sz[2] / 2.0], sz, tag="static")
                )
                self._log(t, f"installed parts left at ({cx:+.2f},{cy:+.2f})")

    def _apply_button(self, t: float, ev: ButtonEvent) -> None:
        for effect in handle_button(self.state, ev):
            if effect[0] == "confirm":
                ids = [
                    r.id
                    for r in (self.monitor.unverified_regions() if self.monitor else [])
                    if r.id in set(effect[1])
                ]
                if ids and self.last_frame is not None:
                    self.monitor.confirm_regions(ids, self.last_frame)
                    self.confirmations += len(ids)
                    self._log(t, f"operator confirmed regions {ids}")
                    if self.wire_hook is not None:
                        self.wire_hook({"v": 1, "type": "confirm_ack", "ids": list(ids)})
                complete_confirmation(self.state)
            elif effect[0] == "warn":
                self._log(t, f"warning: {effect[1]}")
            elif effect[0] == "halted":
                self._log(t, "STOP pressed: halted")
            elif effect[0] == "started":
                self._log(t, "robot enabled (ENABLE+GO)")
            elif effect[0] == "resumed":
                self._log(t, "resumed (ENABLE+GO)")

    def _snapshot(self, n: int, t: float) -> dict:
        fence = None
        if self.include_fence and self.partition is not None and self.partition.danger.any():
            fence = build_fence_mesh(
                danger_boundary(self.partition),
                self.cfg.zone_params,
                self.cfg.camera,
                plane_z=self.cfg.table_z,
            )
        return build_snapshot(
            self.state,
            n,
            t,
            self.partition,
            self.monitor,
            include_fence=fence is not None,
            fence_mesh=fence,
        )


class _ReplayExhausted(Exception):
    pass


def run_scenario(
    script: ScenarioScript,
    cfg: CellConfig,
    mode: str,
    seed: int,
    record_path=None,
) -> RunResult:
    """Run one scenario to completion and return its metrics and logs."""
    engine = ScenarioEngine(script, cfg, mode, seed, record_path=record_path)
    return engine.run()


def replay_stream(
    frames: list[np.ndarray],
    script: ScenarioScript,
    cfg: CellConfig,
    mode: str,
    seed: int,
) -> RunResult:
    """Re-run the session deterministically, substituting recorded frames.

    The verdict log reproduces the recording run bit-for-bit when the
    stream, scenario, seed, and monitor parameters match; with different
    parameters the log may diverge (callers flag them in the output
    header). A stream shorter than the run yields the partial log.
    """
    engine = ScenarioEngine(script, cfg, mode, seed, replay_frames=frames)
    try:
        return engine.run()
    except _ReplayExhausted:
        metrics = MetricsReport(
            total_execution_time=engine._frames * engine.dt,
            robot_idle_time=min(engine.idle_ticks * engine.dt, engine._frames * engine.dt),
            halts=engine.halts,
            confirmations=engine.confirmations,
            mode=mode,
            run_id=f"replay-{mode}-seed{seed}",
        )
        return RunResult(
            metrics=metrics,
            event_log=engine.event_log,
            verdict_log=list(engine.monitor.log) if engine.monitor else [],
            stream_sha256=engine._stream_hash.hexdigest(),
            frames=engine._frames,
            state=engine.state,
            replay_truncated=True,
        )
