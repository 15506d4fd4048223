import { describe, expect, it } from "vitest";

import { validateStylePatch } from "../src/editpanel";
import { History } from "../src/history";

describe("style validation", () => {
  it("accepts sensible patches", () => {
    expect(validateStylePatch({ color: [220, 40, 40], stroke_width: 6 })).toBeNull();
    expect(validateStylePatch({ opacity: 0.5 })).toBeNull();
  });

  it("rejects negative stroke width inline", () => {
    expect(validateStylePatch({ stroke_width: -1 })).toMatch(/stroke width/);
  });

  it("rejects out-of-range colors and opacity", () => {
    expect(validateStylePatch({ color: [300, 0, 0] })).toMatch(/0-255/);
    expect(validateStylePatch({ color: [1, 2] as unknown as [number, number, number] }))
      .toMatch(/\[r, g, b\]/);
    expect(validateStylePatch({ opacity: 1.5 })).toMatch(/opacity/);
  });
});

describe("undo history", () => {
  it("restores previous snapshots and supports redo", () => {
    const h = new History<string>("v0");
    h.push("v1");
    h.push("v2");
    expect(h.current).toBe("v2");
    expect(h.undo()).toBe("v1");
    expect(h.undo()).toBe("v0");
    expect(h.canUndo()).toBe(false);
    expect(h.undo()).toBe("v0"); // no-op at the bottom
    expect(h.redo()).toBe("v1");
    h.push("v1b"); // editing clears the redo branch
    expect(h.canRedo()).toBe(false);
  });
});
