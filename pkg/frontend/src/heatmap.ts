// Weight-sharing heatmap model: one colour per basis matrix, hatching for
// negative entries. Pure data transform; DOM rendering lives in app.ts.

import { PatternData } from "./api.js";

export interface HeatmapCell {
  basis: number; // -1 for empty cells
  sign: number; // 0 for empty cells
  color: string;
  hatched: boolean;
}

export interface HeatmapGrid {
  rows: number;
  cols: number;
  cells: HeatmapCell[][];
  basisCount: number;
  empty: boolean;
}

export class OverlappingSupportError extends Error {}

/** Deterministic palette: hue stepped around the wheel by basis index. */
export function paletteColor(index: number): string {
  const hue = (index * 137) % 360; // golden-angle spacing keeps neighbours distinct
  return `hsl(${hue}, 70%, 55%)`;
}

export function buildHeatmap(pattern: PatternData): HeatmapGrid {
  const [rows, cols] = pattern.shape;
  const cells: HeatmapCell[][] = [];
  for (let r = 0; r < rows; r++) {
    const row: HeatmapCell[] = [];
    for (let c = 0; c < cols; c++) {
      row.push({ basis: -1, sign: 0, color: "transparent", hatched: false });
    }
    cells.push(row);
  }
  pattern.matrices.forEach((triplets, basisIndex) => {
    for (const [r, c, sign] of triplets) {
      if (r < 0 || r >= rows || c < 0 || c >= cols) {
        throw new OverlappingSupportError(`cell (${r}, ${c}) outside the ${rows}x${cols} grid`);
      }
      if (sign !== 1 && sign !== -1) {
        throw new OverlappingSupportError(`cell (${r}, ${c}) carries a non-sign value ${sign}`);
      }
      const cell = cells[r][c];
      if (cell.basis !== -1) {
        throw new OverlappingSupportError(
          `cell (${r}, ${c}) claimed by basis ${cell.basis} and ${basisIndex}`
        );
      }
      cell.basis = basisIndex;
      cell.sign = sign;
      cell.color = paletteColor(basisIndex);
      cell.hatched = sign < 0;
    }
  });
  return {
    rows,
    cols,
    cells,
    basisCount: pattern.matrices.length,
    empty: pattern.matrices.length === 0,
  };
}
