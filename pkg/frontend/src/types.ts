// Wire types mirroring the service's JSON payloads.

export interface ProjectSummary {
  project_id: string;
  frame_count: number;
  fps: number;
  duration_s: number;
  canvas: [number, number];
  turn_count: number;
  event_count: number;
  fact_count: number;
  node_count: number;
}

export interface TurnInfo {
  event_id: string;
  index: number;
  span: [number, number];
}

export interface EventGlyph {
  event_id: string;
  kind: string;
  subject: string;
  span: [number, number];
  hit_frame: number | null;
  color_class: "ball" | "player";
}

export interface Timeline {
  project_id: string;
  frame_count: number;
  turns: TurnInfo[];
  events: EventGlyph[];
  suggested: string[];
}

export interface MappingDoc {
  mapping_id: string;
  attribute: string;
  subject: string;
  anchor_frame: number;
  source_span: [number, number];
  visual: string;
  style: Record<string, unknown>;
  hold_frames: number;
  pass: number;
}

export interface ScriptDoc {
  schema_version: number;
  clip: [number, number];
  order: string;
  mappings: MappingDoc[];
  zigzag?: { anchor: number; rewind_frames: number };
  timefork?: { hypothetical: string[]; actual: string[] };
}

export interface RecommendationInfo {
  attribute: string;
  visual: string;
  source: "corpus" | "fallback";
  probability: number | null;
}

export interface ScriptResponse {
  project_id: string;
  script_id: string;
  script: ScriptDoc;
  schedule_digest: string;
  recommendations: RecommendationInfo[];
}

export interface ScheduleFrame {
  i: number;
  kind: "play" | "hold" | "reverse";
  src: number;
}

export interface ScheduleMap {
  script_id: string;
  order: string;
  clip: [number, number];
  total_frames: number;
  digest: string;
  frames: ScheduleFrame[];
}

export interface ObjectBoxes {
  frame: number;
  ball: { center: [number, number]; bbox: [number, number, number, number] } | null;
  players: { id: string; bbox: [number, number, number, number] }[];
  table: { quad: [number, number][]; net_x: number };
}

export interface ExportResult {
  project_id: string;
  script_id: string;
  bundle_dir: string;
  manifest_path: string;
  total_frames: number;
}

export interface BrushResult {
  start: number;
  end: number;
  node_count: number;
  turns: TurnInfo[];
  events: EventGlyph[];
}

export type Purpose = "entertainment" | "mixed" | "education";
