/** Zoom-dependent view selection.
 *
 * This table must match the backend's `viewForCellSize` exactly: the base
 * cell is 16px and each doubling unlocks a more detailed view. The UI never
 * decides what data a view contains - it only asks the server for the view
 * name this table yields.
 */

export type ViewName = "Volume" | "Distribution" | "Distribution+" | "Dynamics";

export const BASE_CELL_PX = 16;

/** (minimum cell size in px, view) - descending, first match wins. */
export const VIEW_LADDER: ReadonlyArray<readonly [number, ViewName]> = [
  [8 * BASE_CELL_PX, "Dynamics"],
  [4 * BASE_CELL_PX, "Distribution+"],
  [2 * BASE_CELL_PX, "Distribution"],
  [0, "Volume"],
];

export function viewForCellSize(px: number): ViewName {
  for (const [min, view] of VIEW_LADDER) {
    if (px >= min) return view;
  }
  return "Volume";
}
