/** Pan/zoom state for the adjacency-matrix grid.
 *
 * The viewport owns a single number the server cares about - the cell size
 * in pixels - plus a pan offset. Zoom is anchored so the point under the
 * cursor stays put.
 */

import { viewForCellSize, type ViewName } from "./views.js";

export const MIN_CELL_PX = 2;
export const MAX_CELL_PX = 512;

export interface VisibleRange {
  rowStart: number;
  rowEnd: number; // exclusive
  colStart: number;
  colEnd: number; // exclusive
}

export class ViewportState {
  cellSize: number;
  offsetX = 0; // pixels scrolled right into the grid
  offsetY = 0;

  constructor(
    public rowCount: number,
    public colCount: number,
    public canvasWidth: number,
    public canvasHeight: number,
    initialCellSize = 16,
  ) {
    this.cellSize = clampCell(initialCellSize);
    this.clampPan();
  }

  get view(): ViewName {
    return viewForCellSize(this.cellSize);
  }

  pan(dx: number, dy: number): void {
    this.offsetX += dx;
    this.offsetY += dy;
    this.clampPan();
  }

  /** Scale cell size by `factor`, keeping canvas point (ax, ay) anchored. */
  zoom(factor: number, ax = 0, ay = 0): void {
    const next = clampCell(this.cellSize * factor);
    const effective = next / this.cellSize;
    this.offsetX = (this.offsetX + ax) * effective - ax;
    this.offsetY = (this.offsetY + ay) * effective - ay;
    this.cellSize = next;
    this.clampPan();
  }

  visibleRange(): VisibleRange {
    const rowStart = Math.max(0, Math.floor(this.offsetY / this.cellSize));
    const colStart = Math.max(0, Math.floor(this.offsetX / this.cellSize));
    return {
      rowStart,
      rowEnd: Math.min(this.rowCount, Math.ceil((this.offsetY + this.canvasHeight) / this.cellSize)),
      colStart,
      colEnd: Math.min(this.colCount, Math.ceil((this.offsetX + this.canvasWidth) / this.cellSize)),
    };
  }

  /** Canvas coordinates of a cell's top-left corner. */
  cellOrigin(row: number, col: number): { x: number; y: number } {
    return { x: col * this.cellSize - this.offsetX, y: row * this.cellSize - this.offsetY };
  }

  /** Grid cell under a canvas point, or null if outside the grid. */
  cellAt(x: number, y: number): { row: number; col: number } | null {
    const row = Math.floor((y + this.offsetY) / this.cellSize);
    const col = Math.floor((x + this.offsetX) / this.cellSize);
    if (row < 0 || col < 0 || row >= this.rowCount || col >= this.colCount) return null;
    return { row, col };
  }

  private clampPan(): void {
    const maxX = Math.max(0, this.colCount * this.cellSize - this.canvasWidth);
    const maxY = Math.max(0, this.rowCount * this.cellSize - this.canvasHeight);
    this.offsetX = Math.min(Math.max(this.offsetX, 0), maxX);
    this.offsetY = Math.min(Math.max(this.offsetY, 0), maxY);
  }
}

function clampCell(px: number): number {
  return Math.min(Math.max(px, MIN_CELL_PX), MAX_CELL_PX);
}
