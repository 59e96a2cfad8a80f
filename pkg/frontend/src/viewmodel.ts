// Client-side mission state. Everything that changes over time is driven
// either by a mirror document or by an explicit nowMs argument, so the
// whole class can be tested without timers or a DOM.

import type {
  AckData,
  DetectionData,
  HeartbeatData,
  MirrorDoc,
  NodeReachedData,
  SprayData,
  TelemetryData,
  WorldData,
} from "./messages.js";
import { FSM_NAMES, MODE_MANUAL, MODE_NAMES } from "./messages.js";

// link is considered stale once nothing has arrived for this long
export const STALE_AFTER_MS = 3000;
// waiting on a mission ACK past this point counts as a timeout
export const ACK_TIMEOUT_MS = 2000;
// detection markers fade out after this long on screen
export const DETECTION_TTL_MS = 4000;

export const TRAIL_LIMIT = 600;
export const FEED_LIMIT = 50;

export type UploadState = "idle" | "pending" | "acked" | "rejected" | "timeout";

export interface FeedLine {
  text: string;
  atMs: number;
}

export interface LiveDetection extends DetectionData {
  expiresAtMs: number;
}

export class GcsViewModel {
  world: WorldData | null = null;
  telemetry: TelemetryData | null = null;
  mode = -1; // unknown until the first heartbeat
  clockS = 0;
  connected = false;
  lastHeardMs: number | null = null;

  treated = new Set<number>();
  reached = new Set<number>();
  trail: Array<[number, number]> = [];
  feed: FeedLine[] = [];
  detections: LiveDetection[] = [];

  draft: number[] = [];
  uploadState: UploadState = "idle";
  private uploadSentAtMs = 0;

  // highest seq applied per message type; lower or equal arrivals are
  // duplicates or reordered leftovers and get dropped
  private lastSeq = new Map<string, number>();

  setConnected(up: boolean, nowMs: number): void {
    this.connected = up;
    if (up) {
      // every socket is a fresh stream with fresh sequence numbers
      this.lastSeq.clear();
      this.lastHeardMs = nowMs;
      this.pushFeed("link up", nowMs);
    } else {
      this.pushFeed("link down", nowMs);
    }
  }

  /** Apply one mirror document. Returns false when it was dropped. */
  apply(doc: MirrorDoc, nowMs: number): boolean {
    if (typeof doc.seq === "number") {
      const last = this.lastSeq.get(doc.type);
      if (last !== undefined && doc.seq <= last) {
        return false;
      }
      this.lastSeq.set(doc.type, doc.seq);
    }
    this.lastHeardMs = nowMs;

    switch (doc.type) {
      case "WORLD": {
        const world = doc.data as unknown as WorldData;
        this.world = world;
        // a hello means the server state is authoritative again
        this.treated.clear();
        this.reached.clear();
        this.trail = [];
        this.detections = [];
        const valid = new Set(world.nodes.map((n) => n.id));
        this.draft = this.draft.filter((id) => valid.has(id));
        this.pushFeed(
          `world: ${world.sites.length} sites, ${world.nodes.length} nodes`,
          nowMs,
        );
        break;
      }
      case "TELEMETRY": {
        const t = doc.data as unknown as TelemetryData;
        this.telemetry = t;
        this.trail.push([t.x, t.y]);
        if (this.trail.length > TRAIL_LIMIT) {
          this.trail.splice(0, this.trail.length - TRAIL_LIMIT);
        }
        break;
      }
      case "HEARTBEAT": {
        const h = doc.data as unknown as HeartbeatData;
        if (h.mode !== this.mode) {
          this.pushFeed(`mode ${MODE_NAMES[h.mode] ?? h.mode}`, nowMs);
        }
        this.mode = h.mode;
        this.clockS = h.clock_s;
        break;
      }
      case "DETECTION_EVENT": {
        const d = doc.data as unknown as DetectionData;
        this.detections.push({ ...d, expiresAtMs: nowMs + DETECTION_TTL_MS });
        const where = d.site_id >= 0 ? `site ${d.site_id}` : "unmatched";
        this.pushFeed(
          `detection ${where} conf ${d.confidence.toFixed(2)}`,
          nowMs,
        );
        break;
      }
      case "SPRAY_EVENT": {
        const s = doc.data as unknown as SprayData;
        if (s.site_ids.length > 0) {
          for (const id of s.site_ids) {
            this.treated.add(id);
          }
          this.pushFeed(
            `sprayed site ${s.site_ids.join(", ")} (${s.reservoir_ml.toFixed(1)} ml left)`,
            nowMs,
          );
        } else {
          // a spray attempt that covered no site still reports itself
          this.pushFeed(
            `spray rejected (${s.reservoir_ml.toFixed(1)} ml left)`,
            nowMs,
          );
        }
        break;
      }
      case "NODE_REACHED": {
        const n = doc.data as unknown as NodeReachedData;
        this.reached.add(n.node_id);
        this.pushFeed(`node ${n.node_id} reached`, nowMs);
        break;
      }
      case "ACK": {
        const a = doc.data as unknown as AckData;
        // the bridge numbers our commands itself, so the acked seq is not
        // one we chose; any ACK while an upload is pending settles it
        if (this.uploadState === "pending") {
          this.uploadState = a.status === 0 ? "acked" : "rejected";
          this.pushFeed(
            a.status === 0 ? "mission accepted" : "mission rejected",
            nowMs,
          );
        }
        break;
      }
      case "ERROR": {
        const message = (doc.data as { message?: string }).message ?? "?";
        this.pushFeed(`bridge error: ${message}`, nowMs);
        break;
      }
      default:
        // unknown types still count as hearing from the server
        break;
    }

    this.pruneDetections(nowMs);
    return true;
  }

  /** True when connected but silent for longer than STALE_AFTER_MS. */
  isStale(nowMs: number): boolean {
    return (
      this.connected &&
      this.lastHeardMs !== null &&
      nowMs - this.lastHeardMs > STALE_AFTER_MS
    );
  }

  canSend(): boolean {
    return this.connected;
  }

  canDrive(): boolean {
    return this.connected && this.mode === MODE_MANUAL;
  }

  fsmName(): string {
    if (this.telemetry === null) {
      return "?";
    }
    return FSM_NAMES[this.telemetry.fsm_state] ?? String(this.telemetry.fsm_state);
  }

  modeName(): string {
    return MODE_NAMES[this.mode] ?? "?";
  }

  /** Toggle a node in the mission draft. Unknown ids are refused. */
  toggleDraft(nodeId: number): boolean {
    if (this.world === null) {
      return false;
    }
    if (!this.world.nodes.some((n) => n.id === nodeId)) {
      return false;
    }
    const at = this.draft.indexOf(nodeId);
    if (at >= 0) {
      this.draft.splice(at, 1);
    } else {
      this.draft.push(nodeId);
    }
    return true;
  }

  draftReady(): boolean {
    return this.draft.length > 0 && this.canSend();
  }

  /** Call right after the upload command goes out. */
  markUploadSent(nowMs: number): void {
    this.uploadState = "pending";
    this.uploadSentAtMs = nowMs;
  }

  /** Flip a pending upload to timeout once the ACK window has passed. */
  checkUploadTimeout(nowMs: number): boolean {
    if (
      this.uploadState === "pending" &&
      nowMs - this.uploadSentAtMs > ACK_TIMEOUT_MS
    ) {
      this.uploadState = "timeout";
      this.pushFeed("mission upload timed out", nowMs);
      return true;
    }
    return false;
  }

  resetUpload(): void {
    this.uploadState = "idle";
  }

  pruneDetections(nowMs: number): void {
    this.detections = this.detections.filter((d) => d.expiresAtMs > nowMs);
  }

  private pushFeed(text: string, atMs: number): void {
    this.feed.push({ text, atMs });
    if (this.feed.length > FEED_LIMIT) {
      this.feed.splice(0, this.feed.length - FEED_LIMIT);
    }
  }
}
