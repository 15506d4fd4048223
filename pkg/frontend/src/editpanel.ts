// Edit-panel logic: inline style validation (rejected before any request)
// and script mutations routed through the service with undo history.

import type { StudioClient } from "./api";
import { History } from "./history";
import type { ScriptDoc } from "./types";

export interface StylePatch {
  color?: [number, number, number];
  stroke_width?: number;
  opacity?: number;
  font_size?: number;
  label?: string;
  z?: number;
}

/** Returns a human-readable problem, or null when the patch is valid. */
export function validateStylePatch(patch: StylePatch): string | null {
  if (patch.color !== undefined) {
    if (!Array.isArray(patch.color) || patch.color.length !== 3) {
      return "color must be [r, g, b]";
    }
    for (const c of patch.color) {
      if (!Number.isInteger(c) || c < 0 || c > 255) return "color channels must be integers 0-255";
    }
  }
  if (patch.stroke_width !== undefined && !(patch.stroke_width > 0)) {
    return "stroke width must be > 0";
  }
  if (patch.opacity !== undefined && !(patch.opacity >= 0 && patch.opacity <= 1)) {
    return "opacity must be within [0, 1]";
  }
  if (patch.font_size !== undefined && !(patch.font_size > 0)) {
    return "font size must be > 0";
  }
  return null;
}

export class ScriptEditor {
  readonly history: History<ScriptDoc>;

  constructor(
    private client: StudioClient,
    private projectId: string,
    readonly scriptId: string,
    initial: ScriptDoc,
  ) {
    this.history = new History(initial);
  }

  get script(): ScriptDoc {
    return this.history.current;
  }

  async patchMappingStyle(mappingId: string, patch: StylePatch): Promise<ScriptDoc> {
    const problem = validateStylePatch(patch);
    if (problem) throw new Error(problem);
    const res = await this.client.patchMapping(
      this.projectId, this.scriptId, mappingId, { style: patch as Record<string, unknown> });
    this.history.push(res.script);
    return res.script;
  }

  async setOrder(order: string, extra?: { zigzag?: object; timefork?: object }): Promise<ScriptDoc> {
    const res = await this.client.patchScript(this.projectId, this.scriptId, {
      order,
      ...extra,
    });
    this.history.push(res.script);
    return res.script;
  }

  async setClip(clip: [number, number]): Promise<ScriptDoc> {
    const res = await this.client.patchScript(this.projectId, this.scriptId, { clip });
    this.history.push(res.script);
    return res.script;
  }

  /** Client-side history step; re-synchronizes the server to the restored
   * snapshot so previews match. */
  async undo(): Promise<ScriptDoc> {
    if (!this.history.canUndo()) return this.script;
    const restored = this.history.undo();
    await this.client.putScript(this.projectId, this.scriptId, restored);
    return restored;
  }

  async redo(): Promise<ScriptDoc> {
    if (!this.history.canRedo()) return this.script;
    const restored = this.history.redo();
    await this.client.putScript(this.projectId, this.scriptId, restored);
    return restored;
  }
}
