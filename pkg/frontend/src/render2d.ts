// Top-down workspace drawing: danger region red, robot hull blue, human
// zone gray background, pending-region outlines green.

import { Point2 } from "./protocol.js";
import { ViewState } from "./viewmodel.js";

export const COLORS = {
  human: "#3a3a3a",
  danger: "rgba(214, 48, 38, 0.85)",
  robot: "rgba(46, 98, 214, 0.9)",
  pending: "#3fbf4a",
  grid: "#4a4a4a",
};

export interface Segment {
  from: Point2;
  to: Point2;
}

/** Closed path of n segments for an n-vertex polygon (n >= 2). */
export function polygonSegments(points: Point2[]): Segment[] {
  const segs: Segment[] = [];
  for (let i = 0; i < points.length; i++) {
    const j = (i + 1) % points.length;
    if (points.length === 1) break;
    segs.push({ from: points[i], to: points[j] });
  }
  return segs;
}

/** Scale factor + offsets mapping frame pixels onto the canvas. */
export function frameToCanvas(
  frameW: number,
  frameH: number,
  canvasW: number,
  canvasH: number,
): { scale: number; offX: number; offY: number } {
  if (frameW <= 0 || frameH <= 0) {
    return { scale: 1, offX: 0, offY: 0 };
  }
  const scale = Math.min(canvasW / frameW, canvasH / frameH);
  return {
    scale,
    offX: (canvasW - frameW * scale) / 2,
    offY: (canvasH - frameH * scale) / 2,
  };
}

function tracePath(
  ctx: CanvasRenderingContext2D,
  points: Point2[],
  map: { scale: number; offX: number; offY: number },
): void {
  ctx.beginPath();
  points.forEach(([u, v], i) => {
    const x = map.offX + u * map.scale;
    const y = map.offY + v * map.scale;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.closePath();
}

export function drawWorkspace(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  canvasW: number,
  canvasH: number,
): void {
  ctx.fillStyle = COLORS.human;
  ctx.fillRect(0, 0, canvasW, canvasH);
  const map = frameToCanvas(view.frameWidth, view.frameHeight, canvasW, canvasH);

  if (view.dangerBoundary.length >= 3) {
    tracePath(ctx, view.dangerBoundary, map);
    ctx.fillStyle = COLORS.danger;
    ctx.fill();
  }
  if (view.robotHull.length >= 3) {
    tracePath(ctx, view.robotHull, map);
    ctx.fillStyle = COLORS.robot;
    ctx.fill();
  }
  ctx.lineWidth = 2;
  ctx.strokeStyle = COLORS.pending;
  for (const region of view.pending) {
    if (region.outline.length < 2) continue;
    tracePath(ctx, region.outline, map);
    ctx.stroke();
  }
}
