"""Per-frame safety monitoring of the workspace depth model.

The monitor owns the workspace depth model exclusively (single writer) and
must be driven strictly serially: one frame fully evaluated before the next.
Within a frame the danger test runs over every noise-filtered changed pixel
before any other action; a Halt verdict freezes model and ledger for that
frame and is always first in the verdict list.

Verdict log format, one line per evaluated frame::

    frame=<n> verdict=<HALT|UPDATE|RECORD|AWAIT|NONE> clusters=<k> pending=<ids|->

where ``verdict`` is the most severe verdict of the frame (HALT > AWAIT >
RECORD > UPDATE > NONE), ``clusters`` counts noise-filtered change clusters
and ``pending`` lists unverified region ids, comma separated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import DepthImage
from .zones import Mask, ZonePartition


@dataclass(frozen=True)
class MonitorParams:
    depth_threshold_m: float = 0.05
    neighbor_radius_px: float = 1.5
    min_cluster_size: int = 8

    def __post_init__(self):
        if self.depth_threshold_m <= 0:
            raise ValueError("depth threshold must be positive")
        if self.neighbor_radius_px < 1:
            raise ValueError("clustering neighborhood radius must be >= 1 px")
        if self.min_cluster_size < 1:
            raise ValueError("min cluster size must be >= 1")


@dataclass(frozen=True)
class ChangeCluster:
    """A spatially connected group of changed pixels and its zone hits."""

    mask: Mask
    size: int
    in_danger: bool = False
    in_robot: bool = False
    in_human: bool = False

    @property
    def pixels(self) -> np.ndarray:
        """(N, 2) array of (u, v) pixel coordinates."""
        vs, us = np.nonzero(self.mask)
        return np.stack([us, vs], axis=1)


@dataclass
class PendingRegion:
    """A recorded, unverified change in the human zone awaiting CONFIRM."""

    id: int
    mask: Mask
    created_frame: int
    status: str = "unverified"  # "unverified" | "confirmed"


@dataclass(frozen=True)
class Halt:
    cluster: ChangeCluster


@dataclass(frozen=True)
class UpdateModel:
    pixels: Mask


@dataclass(frozen=True)
class RecordHumanChange:
    clusters: tuple[ChangeCluster, ...]


@dataclass(frozen=True)
class AwaitConfirmation:
    region_ids: tuple[int, ...]


Verdict = Halt | UpdateModel | RecordHumanChange | AwaitConfirmation


def detect_changes(model: DepthImage, frame: DepthImage, threshold_m: float) -> Mask:
    """Pixels whose |model - frame| depth difference reaches the threshold.

    Pixels with no sensor return (depth 0) in either image are treated as
    unchanged so static occlusion shadows cannot latch a permanent halt.
    """
    if (model.width, model.height) != (frame.width, frame.height):
        raise ValueError(
            f"frame size {frame.width}x{frame.height} does not match "
            f"model size {model.width}x{model.height}"
        )
    valid = (model.depth > 0) & (frame.depth > 0)
    return valid & (np.abs(model.depth - frame.depth) >= np.float32(threshold_m))


def _neighborhood(radius: float) -> np.ndarray:
    r = int(np.floor(radius))
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    return (dx * dx + dy * dy) <= radius * radius


def cluster_changes(
    mask: Mask,
    params: MonitorParams,
    partition: ZonePartition | None = None,
) -> list[ChangeCluster]:
    """Group changed pixels into neighborhood-connected components.

    Components smaller than ``min_cluster_size`` are discarded as sensor
    noise. With the default 1.5 px radius this is 8-connectivity. Clusters
    come back in raster order of their first pixel; zone hit flags are
    filled when a partition is supplied.
    """
    m = np.asarray(mask, dtype=bool)
    structure = _neighborhood(params.neighbor_radius_px)
    if structure.shape == (3, 3):
        labels, count = ndimage.label(m, structure=structure)
    else:
        labels, count = _label_bfs(m, structure)
    clusters: list[ChangeCluster] = []
    if count == 0:
        return clusters
    sizes = np.bincount(labels.reshape(-1), minlength=count + 1)
    for lab in range(1, count + 1):
        if sizes[lab] < params.min_cluster_size:
            continue
        cmask = labels == lab
        flags = {}
        if partition is not None:
            flags = dict(
                in_danger=bool((cmask & partition.danger).any()),
                in_robot=bool((cmask & partition.robot).any()),
                in_human=bool((cmask & partition.human).any()),
            )
        clusters.append(ChangeCluster(mask=cmask, size=int(sizes[lab]), **flags))
    return clusters


def _label_bfs(mask: Mask, structure: np.ndarray) -> tuple[np.ndarray, int]:
    """Connected labeling for neighborhoods wider than one pixel step."""
    h, w = mask.shape
    r = structure.shape[0] // 2
    offs = [
        (dy - r, dx - r)
        for dy in range(structure.shape[0])
        for dx in range(structure.shape[1])
        if structure[dy, dx] and not (dy == r and dx == r)
    ]
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    for v, u in zip(*np.nonzero(mask)):
        if labels[v, u]:
            continue
        count += 1
        stack = [(v, u)]
        labels[v, u] = count
        while stack:
            cv, cu = stack.pop()
            for dv, du in offs:
                nv, nu = cv + dv, cu + du
                if 0 <= nv < h and 0 <= nu < w and mask[nv, nu] and not labels[nv, nu]:
                    labels[nv, nu] = count
                    stack.append((nv, nu))
    return labels, count


_SEVERITY = {"HALT": 4, "AWAIT": 3, "RECORD": 2, "UPDATE": 1, "NONE": 0}


class Monitor:
    """Owns the workspace depth model and the pending-region ledger."""

    def __init__(self, model: DepthImage, params: MonitorParams | None = None):
        self.params = params or MonitorParams()
        self.model = model.copy()
        self.regions: list[PendingRegion] = []
        self._next_region_id = 1
        self.log: list[str] = []

    # -- queries ---------------------------------------------------------

    def unverified_regions(self) -> list[PendingRegion]:
        return [r for r in self.regions if r.status == "unverified"]

    def _pending_union(self) -> Mask:
        out = np.zeros((self.model.height, self.model.width), dtype=bool)
        for r in self.unverified_regions():
            out |= r.mask
        return out

    # -- core per-frame evaluation ----------------------------------------

    def evaluate_frame(self, frame: DepthImage, partition: ZonePartition) -> list[Verdict]:
        """Apply the zone-conditioned safety rules to one sensor frame.

        Order of business: (1) danger test over all surviving changed pixels
        first; any *new* danger change (not covered by a recorded pending
        region) halts with no model or ledger mutation this frame. Otherwise
        (2) clusters fully inside the robot zone overwrite the model,
        (3) human-zone changes refresh the pending-region ledger, and
        (4) danger-zone overlap with any unverified pending region demands
        operator confirmation.
        """
        if partition.shape != (self.model.height, self.model.width):
            raise ValueError("partition size does not match the workspace model")
        changed = detect_changes(self.model, frame, self.params.depth_threshold_m)
        clusters = cluster_changes(changed, self.params, partition)
        pending_union = self._pending_union()

        halt_cluster = None
        for c in clusters:
            if (c.mask & partition.danger & ~pending_union).any():
                halt_cluster = c
                break
        if halt_cluster is not None:
            verdicts: list[Verdict] = [Halt(halt_cluster)]
            self._log_frame(frame.frame_index, verdicts, clusters)
            return verdicts

        verdicts = []

        updated = np.zeros_like(changed)
        for c in clusters:
            if not (c.mask & ~partition.robot).any():
                updated |= c.mask
        if updated.any():
            self.model.depth[updated] = frame.depth[updated]
            verdicts.append(UpdateModel(updated))

        # Ledger refresh: masks are re-derived from the current measurement.
        # Regions whose change cleared are dropped; persistent ones keep
        # their id and creation frame; masks only ever shrink.
        kept: list[PendingRegion] = []
        for r in self.regions:
            if r.status != "unverified":
                kept.append(r)
                continue
            alive = r.mask & changed
            if not alive.any():
                continue
            if not np.array_equal(alive, r.mask):
                r.mask = alive
            kept.append(r)
        self.regions = kept
        covered = self._pending_union()

        human_clusters = [c for c in clusters if (c.mask & partition.human).any()]
        for c in human_clusters:
            fresh = c.mask & partition.human & ~covered
            if fresh.any():
                self.regions.append(
                    PendingRegion(self._next_region_id, fresh, frame.frame_index)
                )
                self._next_region_id += 1
                covered |= fresh
        if human_clusters:
            verdicts.append(RecordHumanChange(tuple(human_clusters)))

        blocking = tuple(
            r.id for r in self.unverified_regions() if (r.mask & partition.danger).any()
        )
        if blocking:
            verdicts.append(AwaitConfirmation(blocking))

        self._log_frame(frame.frame_index, verdicts, clusters)
        return verdicts

    def confirm_regions(self, region_ids, frame: DepthImage) -> None:
        """Operator-verified regions: copy current depth into the model.

        An empty id list is a no-op; unknown or already-confirmed ids raise.
        """
        ids = list(region_ids)
        if not ids:
            return
        by_id = {r.id: r for r in self.regions}
        for rid in ids:
            r = by_id.get(rid)
            if r is None:
                raise KeyError(f"unknown pending region id {rid}")
            if r.status != "unverified":
                raise ValueError(f"pending region {rid} is already confirmed")
        for rid in ids:
            r = by_id[rid]
            self.model.depth[r.mask] = frame.depth[r.mask]
            r.status = "confirmed"

    # -- logging -----------------------------------------------------------

    def _log_frame(self, frame_index: int, verdicts: list[Verdict], clusters) -> None:
        tag = "NONE"
        for v in verdicts:
            name = {
                Halt: "HALT",
                UpdateModel: "UPDATE",
                RecordHumanChange: "RECORD",
                AwaitConfirmation: "AWAIT",
            }[type(v)]
            if _SEVERITY[name] > _SEVERITY[tag]:
                tag = name
        ids = sorted(r.id for r in self.unverified_regions())
        pending = ",".join(str(i) for i in ids) if ids else "-"
        self.log.append(
            f"frame={frame_index} verdict={tag} clusters={len(clusters)} pending={pending}"
        )
