// Builders for the three command documents the bridge accepts. The bridge
// assigns its own sequence numbers, so builders emit {type, data} only.
// These shapes are pinned against goldens/catalog_goldens.json by the
// conformance tests: do not rename fields here without regenerating the
// vectors on the rover side.

import type { MirrorDoc } from "./messages.js";

export function commandMode(targetMode: number): MirrorDoc {
  return { type: "COMMAND_MODE", data: { target_mode: targetMode } };
}

export function commandManual(
  linear: number,
  angular: number,
  spray: boolean,
): MirrorDoc {
  // spray travels as a u8 on the wire, so the mirror doc carries 0/1
  return {
    type: "COMMAND_MANUAL",
    data: { linear, angular, spray: spray ? 1 : 0 },
  };
}

export function missionUpload(waypointIds: number[]): MirrorDoc {
  return { type: "MISSION_UPLOAD", data: { waypoint_ids: [...waypointIds] } };
}
