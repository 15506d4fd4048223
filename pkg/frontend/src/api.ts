// Thin typed client over the authoring service. The studio computes no
// schedules or recommendations itself; everything comes from these calls.

import type {
  BrushResult,
  ExportResult,
  ObjectBoxes,
  ProjectSummary,
  Purpose,
  ScheduleMap,
  ScriptDoc,
  ScriptResponse,
  Timeline,
} from "./types";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function parseError(res: Response): Promise<ApiError> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // keep statusText
  }
  return new ApiError(res.status, detail);
}

export class StudioClient {
  constructor(private baseUrl: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, init);
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown, method = "POST"): Promise<T> {
    return this.json<T>(path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.json("/health");
  }

  createProject(tracking: unknown, tactics?: unknown, corpus?: unknown): Promise<ProjectSummary> {
    return this.post("/projects", { tracking, tactics: tactics ?? null, corpus: corpus ?? null });
  }

  project(pid: string): Promise<ProjectSummary> {
    return this.json(`/projects/${pid}`);
  }

  timeline(pid: string): Promise<Timeline> {
    return this.json(`/projects/${pid}/timeline`);
  }

  brush(pid: string, start: number, end: number): Promise<BrushResult> {
    return this.json(`/projects/${pid}/pyramid/brush?start=${start}&end=${end}`);
  }

  attributes(pid: string, subject: string, frame: number, purpose: Purpose): Promise<string[]> {
    return this.json<{ attributes: string[] }>(
      `/projects/${pid}/attributes?subject=${encodeURIComponent(subject)}&frame=${frame}&purpose=${purpose}`,
    ).then((r) => r.attributes);
  }

  addSelections(
    pid: string,
    body: {
      script_id?: string;
      subject: string;
      frame: number;
      attributes: string[];
      purpose: Purpose;
      order?: string;
      clip?: [number, number];
    },
  ): Promise<ScriptResponse> {
    return this.post(`/projects/${pid}/selections`, body);
  }

  getScript(pid: string, sid: string): Promise<ScriptResponse> {
    return this.json(`/projects/${pid}/scripts/${sid}`);
  }

  putScript(pid: string, sid: string, doc: ScriptDoc): Promise<ScriptResponse> {
    return this.post(`/projects/${pid}/scripts/${sid}`, doc, "PUT");
  }

  patchScript(
    pid: string,
    sid: string,
    patch: { order?: string; clip?: [number, number]; zigzag?: object; timefork?: object },
  ): Promise<ScriptResponse> {
    return this.post(`/projects/${pid}/scripts/${sid}`, patch, "PATCH");
  }

  patchMapping(
    pid: string,
    sid: string,
    mid: string,
    patch: { style?: Record<string, unknown>; hold_frames?: number; visual?: string },
  ): Promise<ScriptResponse> {
    return this.post(`/projects/${pid}/scripts/${sid}/mappings/${mid}`, patch, "PATCH");
  }

  schedule(pid: string, sid: string): Promise<ScheduleMap> {
    return this.json(`/projects/${pid}/schedule/${sid}`);
  }

  previewUrl(pid: string, sid: string, index: number): string {
    return `${this.baseUrl}/projects/${pid}/preview/${sid}/${index}`;
  }

  async previewBytes(pid: string, sid: string, index: number): Promise<Uint8Array> {
    const res = await fetch(this.previewUrl(pid, sid, index));
    if (!res.ok) throw await parseError(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  sourceFrameUrl(pid: string, index: number): string {
    return `${this.baseUrl}/projects/${pid}/frames/${index}`;
  }

  objectsAt(pid: string, frame: number): Promise<ObjectBoxes> {
    return this.json(`/projects/${pid}/objects/${frame}`);
  }

  exportScript(pid: string, sid: string): Promise<ExportResult> {
    return this.post(`/projects/${pid}/export/${sid}`, {});
  }
}
