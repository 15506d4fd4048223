// Timeline geometry: pixel<->frame mapping, drag-to-brush, and glyph
// layout. Event coloring uses the server-sent color_class; the palette
// here is presentation only.

import type { EventGlyph, TurnInfo } from "./types";

export const GLYPH_COLORS: Record<string, string> = {
  ball: "#e8b83a",
  player: "#d05050",
};

export function frameToPx(frame: number, width: number, frameCount: number): number {
  return (frame / Math.max(1, frameCount - 1)) * width;
}

export function pxToFrame(x: number, width: number, frameCount: number): number {
  const t = Math.min(Math.max(0, x), width) / Math.max(1, width);
  return Math.round(t * (frameCount - 1));
}

/** Ordered, clamped frame interval from a drag gesture. */
export function brushFromDrag(
  x0: number,
  x1: number,
  width: number,
  frameCount: number,
): [number, number] | null {
  if (Math.abs(x1 - x0) < 2) return null; // empty brush ignored
  const a = pxToFrame(Math.min(x0, x1), width, frameCount);
  const b = pxToFrame(Math.max(x0, x1), width, frameCount);
  return a <= b ? [a, b] : [b, a];
}

/** Interval covering a run of turns (used for "brush the last two turns"). */
export function turnsInterval(turns: TurnInfo[], fromIndex: number, toIndex: number): [number, number] {
  const picked = turns.slice(fromIndex, toIndex + 1);
  if (picked.length === 0) throw new Error("no turns in range");
  return [picked[0].span[0], picked[picked.length - 1].span[1]];
}

export interface GlyphRect {
  eventId: string;
  kind: string;
  x: number;
  width: number;
  color: string;
  row: number; // 0 = ball events, 1 = player events
}

export function layoutGlyphs(
  events: EventGlyph[],
  width: number,
  frameCount: number,
): GlyphRect[] {
  return events.map((e) => {
    const x = frameToPx(e.span[0], width, frameCount);
    const x1 = frameToPx(e.span[1] + 1, width, frameCount);
    return {
      eventId: e.event_id,
      kind: e.kind,
      x,
      width: Math.max(2, x1 - x),
      color: GLYPH_COLORS[e.color_class] ?? "#888888",
      row: e.color_class === "ball" ? 0 : 1,
    };
  });
}

export function glyphAt(glyphs: GlyphRect[], x: number, row: number): GlyphRect | null {
  for (const g of glyphs) {
    if (g.row === row && x >= g.x && x <= g.x + g.width) return g;
  }
  return null;
}
