import { describe, expect, it } from "vitest";

import { viewForCellSize } from "../src/views.js";
import { ViewportState } from "../src/viewport.js";

describe("view ladder", () => {
  it("matches the doubling boundary table", () => {
    const table: Array<[number, string]> = [
      [15, "Volume"], [16, "Volume"], [31, "Volume"],
      [32, "Distribution"], [63, "Distribution"],
      [64, "Distribution+"], [127, "Distribution+"],
      [128, "Dynamics"],
    ];
    for (const [px, view] of table) {
      expect(viewForCellSize(px), `${px}px`).toBe(view);
    }
  });

  it("switches exactly at 32, 64 and 128 during a zoom sweep", () => {
    const switches: number[] = [];
    let previous = viewForCellSize(2);
    for (let px = 3; px <= 512; px++) {
      const view = viewForCellSize(px);
      if (view !== previous) {
        switches.push(px);
        previous = view;
      }
    }
    expect(switches).toEqual([32, 64, 128]);
  });
});

describe("viewport", () => {
  it("reports the ladder view for its cell size", () => {
    const vp = new ViewportState(151, 151, 800, 600, 16);
    expect(vp.view).toBe("Volume");
    vp.zoom(2);
    expect(vp.view).toBe("Distribution");
    vp.zoom(2);
    expect(vp.view).toBe("Distribution+");
    vp.zoom(2);
    expect(vp.view).toBe("Dynamics");
  });

  it("clamps panning to the grid", () => {
    const vp = new ViewportState(10, 10, 800, 600, 16); // grid smaller than canvas
    vp.pan(500, 500);
    expect(vp.offsetX).toBe(0);
    expect(vp.offsetY).toBe(0);
  });

  it("keeps the zoom anchor fixed", () => {
    const vp = new ViewportState(151, 151, 400, 400, 16);
    vp.pan(300, 300);
    const before = vp.cellAt(200, 200)!;
    vp.zoom(2, 200, 200);
    const after = vp.cellAt(200, 200)!;
    expect(after).toEqual(before);
  });

  it("visible range covers the canvas and stays in bounds", () => {
    const vp = new ViewportState(151, 151, 400, 300, 16);
    vp.pan(100, 50);
    const r = vp.visibleRange();
    expect(r.rowStart).toBe(Math.floor(50 / 16));
    expect(r.colStart).toBe(Math.floor(100 / 16));
    expect(r.rowEnd).toBeLessThanOrEqual(151);
    expect((r.rowEnd - r.rowStart) * 16).toBeGreaterThanOrEqual(300);
  });
});
