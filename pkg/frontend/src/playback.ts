// Frame-accurate playback against the server's compiled schedule. The
// displayed output frame N is exactly the service's preview frame N: the
// controller fetches the bytes and hands them to the canvas untouched.

import type { StudioClient } from "./api";
import type { ScheduleMap } from "./types";

export class PlaybackController {
  private cache = new Map<number, Uint8Array>();
  private inflight = new Map<number, Promise<Uint8Array>>();

  constructor(
    private client: StudioClient,
    private projectId: string,
    private scriptId: string,
    readonly schedule: ScheduleMap,
  ) {}

  get totalFrames(): number {
    return this.schedule.total_frames;
  }

  /** Source frame shown at an output cursor (constant across a hold run). */
  sourceFrameAt(cursor: number): number {
    this.checkCursor(cursor);
    return this.schedule.frames[cursor].src;
  }

  kindAt(cursor: number): "play" | "hold" | "reverse" {
    this.checkCursor(cursor);
    return this.schedule.frames[cursor].kind;
  }

  /** Output-index range [start, end] of the hold run containing `cursor`,
   * or null when the cursor is not on a hold frame. */
  holdRunAt(cursor: number): [number, number] | null {
    this.checkCursor(cursor);
    if (this.schedule.frames[cursor].kind !== "hold") return null;
    let start = cursor;
    while (start > 0 && this.schedule.frames[start - 1].kind === "hold") start--;
    let end = cursor;
    while (end + 1 < this.totalFrames && this.schedule.frames[end + 1].kind === "hold") end++;
    return [start, end];
  }

  /** Overlay bytes for the displayed frame; a passthrough of the service's
   * preview response (cached per output index). */
  async displayedOverlayBytes(cursor: number): Promise<Uint8Array> {
    this.checkCursor(cursor);
    const cached = this.cache.get(cursor);
    if (cached) return cached;
    let pending = this.inflight.get(cursor);
    if (!pending) {
      pending = this.client.previewBytes(this.projectId, this.scriptId, cursor);
      this.inflight.set(cursor, pending);
    }
    try {
      const bytes = await pending;
      this.cache.set(cursor, bytes);
      return bytes;
    } finally {
      this.inflight.delete(cursor);
    }
  }

  invalidate(): void {
    this.cache.clear();
    this.inflight.clear();
  }

  private checkCursor(cursor: number): void {
    if (cursor < 0 || cursor >= this.totalFrames) {
      throw new Error(`cursor ${cursor} out of range 0..${this.totalFrames - 1}`);
    }
  }
}

export async function loadPlayback(
  client: StudioClient,
  projectId: string,
  scriptId: string,
): Promise<PlaybackController> {
  const schedule = await client.schedule(projectId, scriptId);
  return new PlaybackController(client, projectId, scriptId, schedule);
}
