import { describe, expect, it } from "vitest";

import {
  brushFromDrag,
  frameToPx,
  glyphAt,
  layoutGlyphs,
  pxToFrame,
  turnsInterval,
} from "../src/timeline";
import type { EventGlyph, TurnInfo } from "../src/types";

describe("pixel/frame mapping", () => {
  it("round-trips frames through pixels", () => {
    const width = 960;
    const frames = 300;
    for (const f of [0, 1, 57, 150, 299]) {
      expect(pxToFrame(frameToPx(f, width, frames), width, frames)).toBe(f);
    }
  });

  it("clamps out-of-range pixels", () => {
    expect(pxToFrame(-50, 960, 300)).toBe(0);
    expect(pxToFrame(5000, 960, 300)).toBe(299);
  });
});

describe("brushFromDrag", () => {
  it("orders and clamps the interval", () => {
    const brush = brushFromDrag(800, 100, 960, 300);
    expect(brush).not.toBeNull();
    const [a, b] = brush!;
    expect(a).toBeLessThanOrEqual(b);
    expect(a).toBeGreaterThanOrEqual(0);
    expect(b).toBeLessThanOrEqual(299);
  });

  it("ignores empty brushes", () => {
    expect(brushFromDrag(100, 101, 960, 300)).toBeNull();
  });
});

describe("turnsInterval", () => {
  const turns: TurnInfo[] = [
    { event_id: "turn-00", index: 0, span: [26, 74] },
    { event_id: "turn-01", index: 1, span: [75, 124] },
    { event_id: "turn-02", index: 2, span: [125, 174] },
  ];

  it("covers a run of turns", () => {
    expect(turnsInterval(turns, 1, 2)).toEqual([75, 174]);
  });

  it("rejects an empty run", () => {
    expect(() => turnsInterval(turns, 3, 4)).toThrow();
  });
});

describe("glyph layout", () => {
  const events: EventGlyph[] = [
    { event_id: "bounce-000057", kind: "bounce", subject: "ball",
      span: [57, 57], hit_frame: null, color_class: "ball" },
    { event_id: "stroke-A-000020", kind: "stroke", subject: "A",
      span: [20, 34], hit_frame: 26, color_class: "player" },
  ];

  it("separates ball and player rows and colors by class", () => {
    const glyphs = layoutGlyphs(events, 960, 300);
    const bounce = glyphs.find((g) => g.kind === "bounce")!;
    const stroke = glyphs.find((g) => g.kind === "stroke")!;
    expect(bounce.row).toBe(0);
    expect(stroke.row).toBe(1);
    expect(bounce.color).not.toBe(stroke.color);
    expect(bounce.width).toBeGreaterThanOrEqual(2);
  });

  it("hit-tests glyphs by row", () => {
    const glyphs = layoutGlyphs(events, 960, 300);
    const stroke = glyphs.find((g) => g.kind === "stroke")!;
    expect(glyphAt(glyphs, stroke.x + 1, 1)?.eventId).toBe("stroke-A-000020");
    expect(glyphAt(glyphs, stroke.x + 1, 0)?.eventId).not.toBe("stroke-A-000020");
  });
});
