// The rover's test suite proves that each golden mirror document encodes
// byte for byte to the golden frame. So if our builders reproduce those
// documents exactly, every command this UI emits lands on the wire
// byte-identical to the reference codec.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { commandManual, commandMode, missionUpload } from "../src/commands.js";
import type { MirrorDoc } from "../src/messages.js";

interface GoldenEntry {
  name: string;
  seq: number;
  hex: string;
  mirror: { type: string; seq: number; data: Record<string, unknown> };
}

const goldens: GoldenEntry[] = JSON.parse(
  readFileSync(new URL("../goldens/catalog_goldens.json", import.meta.url), "utf8"),
);

const builders: Record<string, (data: Record<string, unknown>) => MirrorDoc> = {
  COMMAND_MODE: (d) => commandMode(d.target_mode as number),
  COMMAND_MANUAL: (d) =>
    commandManual(d.linear as number, d.angular as number, d.spray === 1),
  MISSION_UPLOAD: (d) => missionUpload(d.waypoint_ids as number[]),
};

describe("golden vector conformance", () => {
  it("rebuilds every golden command document exactly", () => {
    let checked = 0;
    for (const entry of goldens) {
      const build = builders[entry.mirror.type];
      if (build === undefined) {
        continue; // telemetry-direction messages have no builder
      }
      const doc = build(entry.mirror.data);
      expect(doc.type).toBe(entry.mirror.type);
      expect(doc.data).toEqual(entry.mirror.data);
      checked += 1;
    }
    expect(checked).toBe(3);
  });

  it("leaves sequence numbering to the bridge", () => {
    expect(commandMode(2).seq).toBeUndefined();
    expect(commandManual(0.5, 0, false).seq).toBeUndefined();
    expect(missionUpload([1]).seq).toBeUndefined();
  });

  it("encodes spray as a flag byte", () => {
    expect(commandManual(0.75, -0.25, true).data).toEqual({
      linear: 0.75,
      angular: -0.25,
      spray: 1,
    });
    expect(commandManual(0.75, -0.25, false).data.spray).toBe(0);
  });

  it("copies the waypoint list instead of aliasing it", () => {
    const ids = [1, 2, 3, 4];
    const doc = missionUpload(ids);
    ids.push(99);
    expect(doc.data.waypoint_ids).toEqual([1, 2, 3, 4]);
  });
});
