// State tests for the view model. Telemetry-direction documents come from
// the shared golden vectors wherever one exists, so the shapes exercised
// here are exactly what the rover emits.

import { readFileSync } from "node:fs";
import { beforeEach, describe, expect, it } from "vitest";

import type { MirrorDoc } from "../src/messages.js";
import {
  ACK_TIMEOUT_MS,
  DETECTION_TTL_MS,
  GcsViewModel,
  STALE_AFTER_MS,
} from "../src/viewmodel.js";

interface GoldenEntry {
  mirror: { type: string; seq: number; data: Record<string, unknown> };
}

const goldens: GoldenEntry[] = JSON.parse(
  readFileSync(new URL("../goldens/catalog_goldens.json", import.meta.url), "utf8"),
);

function golden(type: string): MirrorDoc {
  const entry = goldens.find((e) => e.mirror.type === type);
  if (entry === undefined) {
    throw new Error(`no golden for ${type}`);
  }
  // deep copy so tests cannot contaminate each other through the fixture
  return JSON.parse(JSON.stringify(entry.mirror));
}

const WORLD: MirrorDoc = {
  type: "WORLD",
  seq: 0,
  data: {
    bounds: [0, 0, 20, 20],
    home: [10, 10],
    obstacles: [],
    sites: [
      { id: 2, center: [4, 4], radius: 1.0, pre_population: 120 },
      { id: 4, center: [9, 15], radius: 0.8, pre_population: 60 },
      { id: 7, center: [16, 6], radius: 1.2, pre_population: 200 },
    ],
    nodes: [
      { id: 1, center: [2, 2], acceptance_radius: 0.6 },
      { id: 5, center: [10, 4], acceptance_radius: 0.6 },
      { id: 9, center: [17, 17], acceptance_radius: 0.6 },
    ],
    waypoints: [1, 5, 9],
    limits: { max_speed: 2.0, max_turn_rate: 1.8 },
  },
};

function world(): MirrorDoc {
  return JSON.parse(JSON.stringify(WORLD));
}

describe("applying mirror documents", () => {
  let vm: GcsViewModel;

  beforeEach(() => {
    vm = new GcsViewModel();
    vm.setConnected(true, 0);
  });

  it("stores the world hello", () => {
    expect(vm.apply(world(), 10)).toBe(true);
    expect(vm.world?.sites.length).toBe(3);
    expect(vm.world?.limits.max_speed).toBe(2.0);
  });

  it("tracks pose and trail from telemetry", () => {
    vm.apply(golden("TELEMETRY"), 10);
    expect(vm.telemetry?.x).toBe(12.5);
    expect(vm.telemetry?.y).toBe(3.25);
    expect(vm.telemetry?.battery_mah).toBe(250.5);
    expect(vm.trail).toEqual([[12.5, 3.25]]);
  });

  it("tracks mode and clock from heartbeats", () => {
    vm.apply(golden("HEARTBEAT"), 10);
    expect(vm.mode).toBe(1);
    expect(vm.clockS).toBe(2.5);
    expect(vm.modeName()).toBe("AUTO");
  });

  it("marks sites treated on a spray event", () => {
    vm.apply(world(), 10);
    vm.apply(golden("SPRAY_EVENT"), 20);
    expect(vm.treated.has(2)).toBe(true);
    expect(vm.treated.has(7)).toBe(true);
    expect(vm.treated.has(4)).toBe(false);
    expect(vm.feed.at(-1)?.text).toContain("sprayed");
  });

  it("reports a spray that hit nothing without marking anything", () => {
    vm.apply(world(), 10);
    vm.apply(
      { type: "SPRAY_EVENT", seq: 50, data: { site_ids: [], reservoir_ml: 120.0 } },
      20,
    );
    expect(vm.treated.size).toBe(0);
    expect(vm.feed.at(-1)?.text).toContain("rejected");
  });

  it("collects reached nodes", () => {
    vm.apply(golden("NODE_REACHED"), 10);
    expect(vm.reached.has(5)).toBe(true);
  });

  it("logs detections into the feed", () => {
    vm.apply(golden("DETECTION_EVENT"), 10);
    expect(vm.detections.length).toBe(1);
    expect(vm.feed.at(-1)?.text).toContain("site 4");
  });

  it("accepts unknown message types as proof of life", () => {
    expect(vm.apply({ type: "SHINY_NEW", seq: 1, data: {} }, 123)).toBe(true);
    expect(vm.lastHeardMs).toBe(123);
  });
});

describe("sequence handling", () => {
  it("drops duplicates and reordered leftovers per type", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    const t17 = golden("TELEMETRY"); // seq 17

    expect(vm.apply(t17, 10)).toBe(true);
    expect(vm.apply(golden("TELEMETRY"), 20)).toBe(false); // exact duplicate
    const stale = golden("TELEMETRY");
    stale.seq = 16;
    expect(vm.apply(stale, 30)).toBe(false);
    expect(vm.trail.length).toBe(1);

    const fresh = golden("TELEMETRY");
    fresh.seq = 18;
    expect(vm.apply(fresh, 40)).toBe(true);
    expect(vm.trail.length).toBe(2);
  });

  it("keeps a counter per stream, not one global counter", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(golden("TELEMETRY"), 10); // seq 17
    expect(vm.apply(golden("HEARTBEAT"), 20)).toBe(true); // seq 3, other stream
    expect(vm.mode).toBe(1);
  });

  it("forgets old counters when a new connection starts", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(golden("TELEMETRY"), 10);
    vm.setConnected(false, 20);
    vm.setConnected(true, 30); // fresh stream restarts numbering
    expect(vm.apply(golden("TELEMETRY"), 40)).toBe(true);
  });
});

describe("staleness", () => {
  it("trips only after the silence threshold", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 1000);
    vm.apply(golden("HEARTBEAT"), 1000);
    expect(vm.isStale(1000 + STALE_AFTER_MS - 1)).toBe(false);
    expect(vm.isStale(1000 + STALE_AFTER_MS)).toBe(false);
    expect(vm.isStale(1000 + STALE_AFTER_MS + 1)).toBe(true);
  });

  it("never reports stale while disconnected", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(golden("HEARTBEAT"), 0);
    vm.setConnected(false, 10);
    expect(vm.isStale(10 + STALE_AFTER_MS + 1000)).toBe(false);
  });

  it("any document resets the silence clock", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(golden("HEARTBEAT"), 0);
    vm.apply(golden("TELEMETRY"), 2900);
    expect(vm.isStale(2900 + STALE_AFTER_MS)).toBe(false);
    expect(vm.isStale(2900 + STALE_AFTER_MS + 1)).toBe(true);
  });
});

describe("mission upload lifecycle", () => {
  it("settles on the first ACK while pending", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.markUploadSent(100);
    expect(vm.uploadState).toBe("pending");
    vm.apply(golden("ACK"), 200); // status 0
    expect(vm.uploadState).toBe("acked");
  });

  it("maps a nonzero status to rejected", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.markUploadSent(100);
    vm.apply({ type: "ACK", seq: 9, data: { acked_seq: 5, status: 2 } }, 200);
    expect(vm.uploadState).toBe("rejected");
  });

  it("ignores an ACK when nothing is pending", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(golden("ACK"), 200);
    expect(vm.uploadState).toBe("idle");
  });

  it("times out a pending upload after the ACK window", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.markUploadSent(1000);
    expect(vm.checkUploadTimeout(1000 + ACK_TIMEOUT_MS - 1)).toBe(false);
    expect(vm.uploadState).toBe("pending");
    expect(vm.checkUploadTimeout(1000 + ACK_TIMEOUT_MS + 1)).toBe(true);
    expect(vm.uploadState).toBe("timeout");
  });

  it("a late ACK after timeout changes nothing", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.markUploadSent(0);
    vm.checkUploadTimeout(ACK_TIMEOUT_MS + 1);
    vm.apply(golden("ACK"), ACK_TIMEOUT_MS + 500);
    expect(vm.uploadState).toBe("timeout");
  });
});

describe("mission draft", () => {
  it("refuses node ids before the world arrives", () => {
    const vm = new GcsViewModel();
    expect(vm.toggleDraft(1)).toBe(false);
  });

  it("only accepts ids the world actually has", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(world(), 0);
    expect(vm.toggleDraft(99)).toBe(false);
    expect(vm.toggleDraft(1)).toBe(true);
    expect(vm.toggleDraft(5)).toBe(true);
    expect(vm.draft).toEqual([1, 5]);
    expect(vm.toggleDraft(1)).toBe(true); // toggles back off
    expect(vm.draft).toEqual([5]);
  });

  it("is ready to send only while connected and non-empty", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(world(), 0);
    expect(vm.draftReady()).toBe(false);
    vm.toggleDraft(1);
    expect(vm.draftReady()).toBe(true);
    vm.setConnected(false, 10);
    expect(vm.draftReady()).toBe(false);
  });
});

describe("detection lifetime", () => {
  it("expires markers after their time to live", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(golden("DETECTION_EVENT"), 0);
    vm.pruneDetections(DETECTION_TTL_MS - 1);
    expect(vm.detections.length).toBe(1);
    vm.pruneDetections(DETECTION_TTL_MS);
    expect(vm.detections.length).toBe(0);
  });
});

describe("reconnect", () => {
  it("a fresh hello resets per-mission markers but keeps valid drafts", () => {
    const vm = new GcsViewModel();
    vm.setConnected(true, 0);
    vm.apply(world(), 0);
    vm.apply(golden("SPRAY_EVENT"), 10);
    vm.apply(golden("NODE_REACHED"), 20);
    vm.apply(golden("TELEMETRY"), 30);
    vm.toggleDraft(1);
    vm.toggleDraft(5);

    vm.setConnected(false, 40);
    vm.setConnected(true, 50);
    const fresh = world();
    (fresh.data.nodes as Array<{ id: number }>).splice(0, 1); // node 1 is gone
    vm.apply(fresh, 60);

    expect(vm.treated.size).toBe(0);
    expect(vm.reached.size).toBe(0);
    expect(vm.trail.length).toBe(0);
    expect(vm.draft).toEqual([5]);
  });
});

describe("drive gate", () => {
  it("allows driving only when connected and in manual mode", () => {
    const vm = new GcsViewModel();
    expect(vm.canDrive()).toBe(false);
    vm.setConnected(true, 0);
    vm.apply(golden("HEARTBEAT"), 0); // mode AUTO
    expect(vm.canDrive()).toBe(false);
    vm.apply({ type: "HEARTBEAT", seq: 99, data: { mode: 2, clock_s: 3.0 } }, 10);
    expect(vm.canDrive()).toBe(true);
    vm.setConnected(false, 20);
    expect(vm.canDrive()).toBe(false);
  });
});
