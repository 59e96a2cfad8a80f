// Canvas renderer for the arena. Pure drawing, no state of its own apart
// from the world-to-canvas transform, which is kept so clicks can be
// mapped back to nodes.

import type { GcsViewModel } from "./viewmodel.js";

const COLORS = {
  background: "#10141a",
  border: "#3a4250",
  obstacle: "#4a5262",
  site: "#d9534f",
  siteTreated: "#5cb85c",
  node: "#8a93a5",
  nodeReached: "#5bc0de",
  nodeDraft: "#f0ad4e",
  home: "#f7f7f7",
  trail: "#38618c",
  rover: "#ffd166",
  text: "#c9d1e0",
};

export class MapView {
  private scale = 1;
  private offsetX = 0;
  private offsetY = 0;

  constructor(private canvas: HTMLCanvasElement) {}

  /** World point to canvas pixels. Y is flipped so north is up. */
  private toCanvas(x: number, y: number): [number, number] {
    return [
      this.offsetX + x * this.scale,
      this.canvas.height - (this.offsetY + y * this.scale),
    ];
  }

  /** Canvas pixels back to world coordinates. */
  toWorld(px: number, py: number): [number, number] {
    return [
      (px - this.offsetX) / this.scale,
      (this.canvas.height - py - this.offsetY) / this.scale,
    ];
  }

  /** Node id under the given canvas point, or null. */
  pickNode(vm: GcsViewModel, px: number, py: number): number | null {
    if (vm.world === null) {
      return null;
    }
    const [wx, wy] = this.toWorld(px, py);
    const slack = 12 / this.scale; // click tolerance in world units
    let best: number | null = null;
    let bestD = Infinity;
    for (const node of vm.world.nodes) {
      const d = Math.hypot(node.center[0] - wx, node.center[1] - wy);
      if (d <= Math.max(node.acceptance_radius, slack) && d < bestD) {
        best = node.id;
        bestD = d;
      }
    }
    return best;
  }

  render(vm: GcsViewModel, nowMs: number): void {
    const ctx = this.canvas.getContext("2d");
    if (ctx === null) {
      return;
    }
    const w = this.canvas.width;
    const h = this.canvas.height;
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, w, h);

    if (vm.world === null) {
      ctx.fillStyle = COLORS.text;
      ctx.font = "16px sans-serif";
      ctx.fillText("waiting for world...", 20, 30);
      return;
    }

    const [x0, y0, x1, y1] = vm.world.bounds;
    const margin = 24;
    this.scale = Math.min(
      (w - 2 * margin) / (x1 - x0),
      (h - 2 * margin) / (y1 - y0),
    );
    this.offsetX = margin - x0 * this.scale;
    this.offsetY = margin - y0 * this.scale;

    // arena border
    const [bx0, by0] = this.toCanvas(x0, y1);
    ctx.strokeStyle = COLORS.border;
    ctx.lineWidth = 2;
    ctx.strokeRect(bx0, by0, (x1 - x0) * this.scale, (y1 - y0) * this.scale);

    // obstacles
    ctx.fillStyle = COLORS.obstacle;
    for (const obs of vm.world.obstacles) {
      if (obs.kind === "circle" && obs.center && obs.radius !== undefined) {
        const [cx, cy] = this.toCanvas(obs.center[0], obs.center[1]);
        ctx.beginPath();
        ctx.arc(cx, cy, obs.radius * this.scale, 0, 2 * Math.PI);
        ctx.fill();
      } else if (obs.kind === "poly" && obs.vertices) {
        ctx.beginPath();
        obs.vertices.forEach((v, i) => {
          const [px, py] = this.toCanvas(v[0], v[1]);
          if (i === 0) {
            ctx.moveTo(px, py);
          } else {
            ctx.lineTo(px, py);
          }
        });
        ctx.closePath();
        ctx.fill();
      }
    }

    // breeding sites flip color once sprayed
    for (const site of vm.world.sites) {
      const [cx, cy] = this.toCanvas(site.center[0], site.center[1]);
      ctx.fillStyle = vm.treated.has(site.id) ? COLORS.siteTreated : COLORS.site;
      ctx.globalAlpha = 0.7;
      ctx.beginPath();
      ctx.arc(cx, cy, Math.max(4, site.radius * this.scale), 0, 2 * Math.PI);
      ctx.fill();
      ctx.globalAlpha = 1;
    }

    // patrol nodes
    for (const node of vm.world.nodes) {
      const [cx, cy] = this.toCanvas(node.center[0], node.center[1]);
      ctx.fillStyle = vm.reached.has(node.id) ? COLORS.nodeReached : COLORS.node;
      ctx.beginPath();
      ctx.arc(cx, cy, 5, 0, 2 * Math.PI);
      ctx.fill();
      if (vm.draft.includes(node.id)) {
        ctx.strokeStyle = COLORS.nodeDraft;
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.arc(cx, cy, 9, 0, 2 * Math.PI);
        ctx.stroke();
      }
      ctx.fillStyle = COLORS.text;
      ctx.font = "11px sans-serif";
      ctx.fillText(String(node.id), cx + 8, cy - 8);
    }

    // home pad
    const [hx, hy] = this.toCanvas(vm.world.home[0], vm.world.home[1]);
    ctx.strokeStyle = COLORS.home;
    ctx.lineWidth = 1.5;
    ctx.strokeRect(hx - 6, hy - 6, 12, 12);
    ctx.fillStyle = COLORS.text;
    ctx.fillText("H", hx - 3, hy + 4);

    // breadcrumb trail
    if (vm.trail.length > 1) {
      ctx.strokeStyle = COLORS.trail;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      vm.trail.forEach(([tx, ty], i) => {
        const [px, py] = this.toCanvas(tx, ty);
        if (i === 0) {
          ctx.moveTo(px, py);
        } else {
          ctx.lineTo(px, py);
        }
      });
      ctx.stroke();
    }

    // rover pose
    if (vm.telemetry !== null) {
      const t = vm.telemetry;
      const [rx, ry] = this.toCanvas(t.x, t.y);
      ctx.save();
      ctx.translate(rx, ry);
      ctx.rotate(-t.heading); // canvas y is flipped, so headings negate
      ctx.fillStyle = COLORS.rover;
      ctx.beginPath();
      ctx.moveTo(10, 0);
      ctx.lineTo(-6, 5);
      ctx.lineTo(-6, -5);
      ctx.closePath();
      ctx.fill();
      ctx.restore();

      // live detections pulse around the rover
      vm.pruneDetections(nowMs);
      if (vm.detections.length > 0) {
        const pulse = 14 + 4 * Math.sin(nowMs / 120);
        ctx.strokeStyle = COLORS.site;
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.arc(rx, ry, pulse, 0, 2 * Math.PI);
        ctx.stroke();
      }
    }

    // stale-link banner on top of everything
    if (vm.isStale(nowMs)) {
      ctx.fillStyle = "rgba(168, 50, 50, 0.85)";
      ctx.fillRect(0, 0, w, 34);
      ctx.fillStyle = "#fff";
      ctx.font = "bold 15px sans-serif";
      ctx.fillText("LINK STALE: no data from rover", 16, 22);
    }
  }
}
