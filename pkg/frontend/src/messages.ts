// Mirror channel documents. Field names match the rover's message catalog
// one to one; the server wraps every message as {type, seq, data} and
// accepts the three command types back without a seq (the bridge assigns
// its own).

export interface MirrorDoc {
  type: string;
  seq?: number;
  data: Record<string, unknown>;
}

export interface TelemetryData {
  x: number;
  y: number;
  heading: number;
  battery_mah: number;
  reservoir_ml: number;
  fsm_state: number;
  gps_x: number;
  gps_y: number;
}

export interface HeartbeatData {
  mode: number;
  clock_s: number;
}

export interface DetectionData {
  class_id: number;
  confidence: number;
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
  site_id: number;
}

export interface SprayData {
  site_ids: number[];
  reservoir_ml: number;
}

export interface NodeReachedData {
  node_id: number;
  clock_s: number;
}

export interface AckData {
  acked_seq: number;
  status: number;
}

export interface WorldObstacle {
  kind: "circle" | "poly";
  center?: number[];
  radius?: number;
  vertices?: number[][];
}

export interface WorldSite {
  id: number;
  center: number[];
  radius: number;
  pre_population: number;
}

export interface WorldNode {
  id: number;
  center: number[];
  acceptance_radius: number;
}

export interface WorldData {
  bounds: number[];
  home: number[];
  obstacles: WorldObstacle[];
  sites: WorldSite[];
  nodes: WorldNode[];
  waypoints: number[];
  limits: { max_speed: number; max_turn_rate: number };
}

export const MODE_IDLE = 0;
export const MODE_AUTO = 1;
export const MODE_MANUAL = 2;
export const MODE_RTL = 3;
export const MODE_DONE = 4;
export const MODE_FAULT = 5;

export const MODE_NAMES: Record<number, string> = {
  [MODE_IDLE]: "IDLE",
  [MODE_AUTO]: "AUTO",
  [MODE_MANUAL]: "MANUAL",
  [MODE_RTL]: "RTL",
  [MODE_DONE]: "DONE",
  [MODE_FAULT]: "FAULT",
};

export const FSM_NAMES: Record<number, string> = {
  0: "IDLE",
  1: "NAVIGATE",
  2: "INSPECT",
  3: "TREAT",
  4: "RTL",
  5: "DONE",
  6: "FAULT",
};
