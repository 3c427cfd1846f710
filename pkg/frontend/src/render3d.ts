// Software-projected 3D fence view: the danger boundary extruded into a
// semi-transparent red wall, rotatable about the vertical axis.

import { Triangle3 } from "./protocol.js";

export interface ProjectedTri {
  pts: [number, number][]; // canvas coordinates
  depth: number; // mean view depth, for painter's-algorithm sorting
}

export interface FenceCamera {
  yaw: number; // radians around the world z axis
  pitch: number; // radians, 0 = horizontal view
  distance: number; // meters from the workspace center
  cx: number; // workspace center, meters
  cy: number;
}

export const DEFAULT_FENCE_CAMERA: FenceCamera = {
  yaw: 0.7,
  pitch: 0.5,
  distance: 3.2,
  cx: 0,
  cy: 0,
};

/**
 * Project fence triangles with a simple orbit camera. Returns triangles in
 * back-to-front order. Degenerate meshes (single wall) project fine.
 */
export function projectFence(
  triangles: Triangle3[],
  cam: FenceCamera,
  canvasW: number,
  canvasH: number,
): ProjectedTri[] {
  const focal = 0.9 * Math.min(canvasW, canvasH);
  const cosYaw = Math.cos(cam.yaw);
  const sinYaw = Math.sin(cam.yaw);
  const cosP = Math.cos(cam.pitch);
  const sinP = Math.sin(cam.pitch);
  const out: ProjectedTri[] = [];
  for (const tri of triangles) {
    const pts: [number, number][] = [];
    let depthSum = 0;
    let behind = false;
    for (const [x, y, z] of tri) {
      // orbit camera: yaw about z, pitch toward the table, then push back
      const dx = x - cam.cx;
      const dy = y - cam.cy;
      const rx = cosYaw * dx + sinYaw * dy;
      const ry = -sinYaw * dx + cosYaw * dy;
      const vy = cosP * ry - sinP * z;
      const vz = sinP * ry + cosP * z;
      const depth = cam.distance + vy;
      if (depth <= 0.05) {
        behind = true;
        break;
      }
      depthSum += depth;
      pts.push([
        canvasW / 2 + (focal * rx) / depth,
        canvasH / 2 - (focal * vz) / depth + canvasH * 0.18,
      ]);
    }
    if (!behind && pts.length === 3) {
      out.push({ pts, depth: depthSum / 3 });
    }
  }
  out.sort((a, b) => b.depth - a.depth);
  return out;
}

export function drawFence(
  ctx: CanvasRenderingContext2D,
  triangles: Triangle3[] | null,
  cam: FenceCamera,
  canvasW: number,
  canvasH: number,
): void {
  ctx.clearRect(0, 0, canvasW, canvasH);
  ctx.fillStyle = "#262626";
  ctx.fillRect(0, 0, canvasW, canvasH);
  if (!triangles || triangles.length === 0) {
    return; // fence absent: view stays hidden
  }
  const projected = projectFence(triangles, cam, canvasW, canvasH);
  ctx.fillStyle = "rgba(220, 40, 40, 0.35)";
  ctx.strokeStyle = "rgba(255, 120, 120, 0.8)";
  ctx.lineWidth = 1;
  for (const tri of projected) {
    ctx.beginPath();
    ctx.moveTo(tri.pts[0][0], tri.pts[0][1]);
    ctx.lineTo(tri.pts[1][0], tri.pts[1][1]);
    ctx.lineTo(tri.pts[2][0], tri.pts[2][1]);
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  }
}
