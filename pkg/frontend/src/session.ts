// Authoring session state. Pure update functions so the invariants are
// unit-testable without a DOM: the schedule cursor stays below the frame
// total, the brushed interval stays inside the clip.

export interface PlaybackState {
  playing: boolean;
  cursor: number;
  totalFrames: number;
}

export interface UiSession {
  projectId: string;
  frameCount: number;
  currentFrame: number;
  brush: [number, number] | null;
  scriptId: string | null;
  playback: PlaybackState | null;
}

export function createSession(projectId: string, frameCount: number): UiSession {
  if (frameCount <= 0) throw new Error("frameCount must be positive");
  return {
    projectId,
    frameCount,
    currentFrame: 0,
    brush: null,
    scriptId: null,
    playback: null,
  };
}

export function setCurrentFrame(session: UiSession, frame: number): UiSession {
  const clamped = Math.min(Math.max(0, Math.round(frame)), session.frameCount - 1);
  return { ...session, currentFrame: clamped };
}

export function setBrush(session: UiSession, start: number, end: number): UiSession {
  if (end < start) [start, end] = [end, start];
  if (start < 0 || end > session.frameCount - 1) {
    throw new Error(`brush [${start}, ${end}] outside clip [0, ${session.frameCount - 1}]`);
  }
  return { ...session, brush: [start, end] };
}

export function clearBrush(session: UiSession): UiSession {
  return { ...session, brush: null };
}

export function attachScript(session: UiSession, scriptId: string): UiSession {
  return { ...session, scriptId };
}

export function startPlayback(session: UiSession, totalFrames: number): UiSession {
  if (totalFrames <= 0) throw new Error("schedule has no frames");
  return { ...session, playback: { playing: true, cursor: 0, totalFrames } };
}

export function setCursor(session: UiSession, cursor: number): UiSession {
  const pb = session.playback;
  if (!pb) throw new Error("no active playback");
  if (cursor < 0 || cursor >= pb.totalFrames) {
    throw new Error(`cursor ${cursor} out of range 0..${pb.totalFrames - 1}`);
  }
  return { ...session, playback: { ...pb, cursor } };
}

/** Advance one output frame; stops (playing=false) at the last frame. */
export function tick(session: UiSession): UiSession {
  const pb = session.playback;
  if (!pb || !pb.playing) return session;
  if (pb.cursor + 1 >= pb.totalFrames) {
    return { ...session, playback: { ...pb, playing: false } };
  }
  return { ...session, playback: { ...pb, cursor: pb.cursor + 1 } };
}

export function pause(session: UiSession): UiSession {
  const pb = session.playback;
  if (!pb) return session;
  return { ...session, playback: { ...pb, playing: false } };
}

export function stopPlayback(session: UiSession): UiSession {
  return { ...session, playback: null };
}
