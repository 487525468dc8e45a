/** Canvas renderer for the matrix grid.
 *
 * Takes a minimal 2D-context interface instead of CanvasRenderingContext2D
 * so tests can run against a recording stub. Volume cells use a single-hue
 * grayscale ramp (white = no traffic, black = busiest pair); Distribution
 * cells draw histogram bars; Dynamics cells draw one strip per episode with
 * the server-provided fade factor as opacity - the 0.15 floor keeps every
 * strip visible.
 */

import type { MatrixCell, MatrixResponse } from "./api.js";
import type { ViewportState } from "./viewport.js";

export interface Context2DLike {
  fillStyle: string;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeStyle: string;
  strokeRect(x: number, y: number, w: number, h: number): void;
}

export function volumeColor(normalizedCount: number): string {
  const clamped = Math.min(Math.max(normalizedCount, 0), 1);
  const level = Math.round(255 * (1 - clamped));
  return `rgb(${level},${level},${level})`;
}

export function renderMatrix(
  ctx: Context2DLike,
  viewport: ViewportState,
  matrix: MatrixResponse,
): number {
  const rowPos = new Map(matrix.rowOrder.map((id, i) => [id, i] as const));
  const colPos = new Map(matrix.colOrder.map((id, i) => [id, i] as const));

  ctx.globalAlpha = 1;
  ctx.fillStyle = "rgb(255,255,255)";
  ctx.fillRect(0, 0, viewport.canvasWidth, viewport.canvasHeight);

  const range = viewport.visibleRange();
  const size = viewport.cellSize;
  let painted = 0;
  for (const cell of matrix.cells) {
    const r = rowPos.get(cell.row);
    const c = colPos.get(cell.col);
    if (r === undefined || c === undefined) continue;
    if (r < range.rowStart || r >= range.rowEnd || c < range.colStart || c >= range.colEnd) continue;
    const { x, y } = viewport.cellOrigin(r, c);
    paintCell(ctx, cell, matrix.view, x, y, size);
    painted += 1;
  }
  return painted;
}

function paintCell(
  ctx: Context2DLike,
  cell: MatrixCell,
  view: MatrixResponse["view"],
  x: number,
  y: number,
  size: number,
): void {
  if (view === "Volume") {
    ctx.globalAlpha = 1;
    ctx.fillStyle = volumeColor(cell.normalizedCount);
    ctx.fillRect(x, y, size, size);
    return;
  }

  if (view === "Distribution" || view === "Distribution+") {
    ctx.globalAlpha = 1;
    ctx.fillStyle = volumeColor(cell.normalizedCount * 0.25); // pale backdrop
    ctx.fillRect(x, y, size, size);
    const hist = cell.histogram;
    if (!hist || hist.counts.length === 0) return;
    const peak = Math.max(...hist.counts, 1);
    const barWidth = size / hist.counts.length;
    ctx.fillStyle = "rgb(40,40,40)";
    hist.counts.forEach((count, i) => {
      if (count === 0) return;
      const barHeight = (count / peak) * (size - 2);
      ctx.fillRect(x + i * barWidth, y + size - barHeight, Math.max(barWidth - 1, 1), barHeight);
    });
    return;
  }

  // Dynamics: one strip per episode, length proportional to duration within
  // the cell's episode extent, opacity from the relevance fade factor.
  ctx.globalAlpha = 1;
  ctx.fillStyle = "rgb(255,255,255)";
  ctx.fillRect(x, y, size, size);
  ctx.strokeStyle = "rgb(220,220,220)";
  ctx.strokeRect(x, y, size, size);
  const episodes = cell.episodes ?? [];
  if (episodes.length === 0) return;
  const extentStart = Math.min(...episodes.map((e) => e.start));
  const extentEnd = Math.max(...episodes.map((e) => e.end));
  const span = Math.max(extentEnd - extentStart, 1);
  const stripHeight = Math.max(size / episodes.length - 1, 1);
  episodes.forEach((ep, i) => {
    const stripX = x + ((ep.start - extentStart) / span) * size;
    const stripW = Math.max(((ep.end - ep.start) / span) * size, 2);
    ctx.globalAlpha = ep.fadeFactor;
    ctx.fillStyle = "rgb(30,30,30)";
    ctx.fillRect(stripX, y + i * (stripHeight + 1), stripW, stripHeight);
  });
  ctx.globalAlpha = 1;
}
