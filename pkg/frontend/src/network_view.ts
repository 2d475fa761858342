/** Interactive collaboration network on a canvas.
 *
 * Client-side force layout (seeded), node area proportional to
 * investment, edge width to shared projects. Supports pan/zoom, node
 * drag, hover tooltips and click-to-select.
 */

import { ForceSimulation } from "./force.js";
import { edgeWidth, nodeRadius, orgTypeColor } from "./scales.js";
import { NetworkPayload } from "./types.js";

export interface NetworkCallbacks {
  onSelectOrg: (orgId: string | null) => void;
  onHover?: (orgId: string | null) => void;
}

export class NetworkView {
  private sim: ForceSimulation | null = null;
  private payload: NetworkPayload = { nodes: [], edges: [] };
  private radii = new Map<string, number>();
  private maxWeight = 1;
  private scale = 1;
  private offsetX = 0;
  private offsetY = 0;
  private dragging: string | null = null;
  private panning = false;
  private lastPointer: [number, number] = [0, 0];
  private hovered: string | null = null;
  private selected: string | null = null;
  private animating = false;

  constructor(private canvas: HTMLCanvasElement,
              private tooltip: HTMLElement,
              private callbacks: NetworkCallbacks) {
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
    canvas.addEventListener("pointerleave", () => this.pointerLeave());
    canvas.addEventListener("wheel", (e) => this.wheel(e), { passive: false });
  }

  setData(payload: NetworkPayload): void {
    this.payload = payload;
    this.sim = new ForceSimulation(payload.nodes, payload.edges, 42);
    const investments = new Map(payload.nodes.map((n) => [n.id, n.investment]));
    let maxInvestment = 0;
    for (const v of investments.values()) maxInvestment = Math.max(maxInvestment, v);
    this.radii = new Map(
      payload.nodes.map((n) => [n.id, nodeRadius(n.investment, maxInvestment)]));
    this.maxWeight = Math.max(1, ...payload.edges.map((e) => e.weight));
    this.fitView();
    this.animate();
  }

  setSelected(orgId: string | null): void {
    this.selected = orgId;
    this.draw();
  }

  private fitView(): void {
    this.scale = Math.min(this.canvas.width, this.canvas.height) * 0.82;
    this.offsetX = this.canvas.width / 2 - this.scale * 0.5;
    this.offsetY = this.canvas.height / 2 - this.scale * 0.5;
  }

  private toScreen(x: number, y: number): [number, number] {
    return [x * this.scale + this.offsetX, y * this.scale + this.offsetY];
  }

  private toWorld(px: number, py: number): [number, number] {
    return [(px - this.offsetX) / this.scale, (py - this.offsetY) / this.scale];
  }

  private animate(): void {
    if (this.animating) return;
    this.animating = true;
    const tick = () => {
      if (this.sim && !this.sim.settled) {
        for (let i = 0; i < 3; i++) this.sim.step();
        this.draw();
        requestAnimationFrame(tick);
      } else {
        this.animating = false;
        this.draw();
      }
    };
    requestAnimationFrame(tick);
  }

  private nodeAt(px: number, py: number): string | null {
    if (!this.sim) return null;
    for (let i = this.sim.nodes.length - 1; i >= 0; i--) {
      const node = this.sim.nodes[i];
      const [sx, sy] = this.toScreen(node.x, node.y);
      const r = (this.radii.get(node.id) ?? 3) + 2;
      if ((px - sx) ** 2 + (py - sy) ** 2 <= r * r) return node.id;
    }
    return null;
  }

  private pointerDown(e: PointerEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    const hit = this.nodeAt(px, py);
    this.lastPointer = [px, py];
    if (hit && this.sim) {
      this.dragging = hit;
      const node = this.sim.node(hit);
      if (node) node.pinned = true;
      this.canvas.setPointerCapture(e.pointerId);
    } else {
      this.panning = true;
    }
  }

  private pointerMove(e: PointerEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    if (this.dragging && this.sim) {
      const node = this.sim.node(this.dragging);
      if (node) {
        [node.x, node.y] = this.toWorld(px, py);
        this.sim.reheat();
        this.animate();
      }
    } else if (this.panning) {
      this.offsetX += px - this.lastPointer[0];
      this.offsetY += py - this.lastPointer[1];
      this.draw();
    } else {
      const hit = this.nodeAt(px, py);
      if (hit !== this.hovered) {
        this.hovered = hit;
        this.callbacks.onHover?.(hit);
        this.draw();
      }
      this.showTooltip(hit, e.clientX, e.clientY);
    }
    this.lastPointer = [px, py];
  }

  private pointerUp(e: PointerEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    if (this.dragging && this.sim) {
      const node = this.sim.node(this.dragging);
      if (node) node.pinned = false;
      this.dragging = null;
    } else if (this.panning) {
      this.panning = false;
      const moved = Math.hypot(px - this.lastPointer[0], py - this.lastPointer[1]);
      if (moved < 3) {
        const hit = this.nodeAt(px, py);
        this.selected = hit;
        this.callbacks.onSelectOrg(hit);
        this.draw();
      }
    }
  }

  private pointerLeave(): void {
    this.panning = false;
    this.hovered = null;
    this.tooltip.style.display = "none";
    this.draw();
  }

  private wheel(e: WheelEvent): void {
    e.preventDefault();
    const rect = this.canvas.getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    const factor = e.deltaY < 0 ? 1.15 : 1 / 1.15;
    const [wx, wy] = this.toWorld(px, py);
    this.scale *= factor;
    this.offsetX = px - wx * this.scale;
    this.offsetY = py - wy * this.scale;
    this.draw();
  }

  private showTooltip(orgId: string | null, clientX: number, clientY: number): void {
    if (!orgId) {
      this.tooltip.style.display = "none";
      return;
    }
    const node = this.payload.nodes.find((n) => n.id === orgId);
    if (!node) return;
    this.tooltip.textContent =
      `${node.name} — ${node.projects} project(s)`;
    this.tooltip.style.display = "block";
    this.tooltip.style.left = `${clientX + 12}px`;
    this.tooltip.style.top = `${clientY + 12}px`;
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.sim) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.payload.nodes.length === 0) {
      ctx.fillStyle = "#777";
      ctx.font = "14px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.fillText("No collaborations match the current filters",
                   this.canvas.width / 2, this.canvas.height / 2);
      return;
    }
    const pos = new Map(this.sim.nodes.map((n) => [n.id, this.toScreen(n.x, n.y)]));
    ctx.lineCap = "round";
    for (const edge of this.payload.edges) {
      const a = pos.get(edge.source);
      const b = pos.get(edge.target);
      if (!a || !b) continue;
      ctx.strokeStyle = "rgba(120, 130, 150, 0.35)";
      ctx.lineWidth = edgeWidth(edge.weight, this.maxWeight);
      ctx.beginPath();
      ctx.moveTo(a[0], a[1]);
      ctx.lineTo(b[0], b[1]);
      ctx.stroke();
    }
    for (const node of this.payload.nodes) {
      const p = pos.get(node.id);
      if (!p) continue;
      const r = this.radii.get(node.id) ?? 3;
      ctx.beginPath();
      ctx.arc(p[0], p[1], r, 0, Math.PI * 2);
      ctx.fillStyle = orgTypeColor(node.orgType);
      ctx.globalAlpha = this.hovered && this.hovered !== node.id ? 0.55 : 0.92;
      ctx.fill();
      ctx.globalAlpha = 1;
      if (node.id === this.selected || node.id === this.hovered) {
        ctx.strokeStyle = node.id === this.selected ? "#111" : "#555";
        ctx.lineWidth = 2;
        ctx.stroke();
      }
    }
    ctx.fillStyle = "#333";
    ctx.font = "10px system-ui, sans-serif";
    ctx.textAlign = "center";
    for (const node of this.payload.nodes) {
      const r = this.radii.get(node.id) ?? 0;
      if (r >= 14) {
        const p = pos.get(node.id)!;
        ctx.fillText(node.name.slice(0, 24), p[0], p[1] - r - 4);
      }
    }
  }
}
