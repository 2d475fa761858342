/** Seeded Fruchterman-Reingold simulation for the client-side network.
 *
 * Runs incrementally so the canvas can animate while cooling; dragged
 * nodes are pinned and re-heat the simulation.
 */

import { NetworkEdge, NetworkNode } from "./types.js";

export interface SimNode {
  id: string;
  x: number;
  y: number;
  pinned: boolean;
}

/** Deterministic 32-bit generator (mulberry32). */
export function seededRandom(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class ForceSimulation {
  nodes: SimNode[] = [];
  private index = new Map<string, number>();
  private edges: Array<[number, number, number]> = [];
  private k = 0.1;
  temperature = 0.1;

  constructor(nodes: NetworkNode[], edges: NetworkEdge[], seed = 42) {
    const rand = seededRandom(seed);
    this.nodes = nodes.map((n) => ({ id: n.id, x: rand(), y: rand(), pinned: false }));
    this.nodes.forEach((n, i) => this.index.set(n.id, i));
    this.edges = edges
      .filter((e) => this.index.has(e.source) && this.index.has(e.target))
      .map((e) => [
        this.index.get(e.source)!,
        this.index.get(e.target)!,
        Math.log1p(e.weight),
      ]);
    this.k = Math.sqrt(1 / Math.max(1, this.nodes.length));
    this.temperature = 0.1;
  }

  node(id: string): SimNode | undefined {
    const i = this.index.get(id);
    return i === undefined ? undefined : this.nodes[i];
  }

  reheat(): void {
    this.temperature = Math.max(this.temperature, 0.03);
  }

  get settled(): boolean {
    return this.temperature < 1e-4;
  }

  /** One cooling iteration; repulsion k^2/d, attraction d^2/k * ln(1+w). */
  step(): void {
    const n = this.nodes.length;
    if (n < 2 || this.settled) return;
    const k = this.k;
    const dx = new Float64Array(n);
    const dy = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let ex = this.nodes[i].x - this.nodes[j].x;
        let ey = this.nodes[i].y - this.nodes[j].y;
        let d = Math.hypot(ex, ey);
        if (d < 1e-9) {
          ex = 1e-6 * (i - j);
          ey = 1e-6;
          d = Math.hypot(ex, ey);
        }
        const force = (k * k) / (d * d);
        dx[i] += ex * force;
        dy[i] += ey * force;
        dx[j] -= ex * force;
        dy[j] -= ey * force;
      }
    }
    for (const [a, b, scale] of this.edges) {
      const ex = this.nodes[a].x - this.nodes[b].x;
      const ey = this.nodes[a].y - this.nodes[b].y;
      const d = Math.max(Math.hypot(ex, ey), 1e-9);
      const force = (d / k) * scale;
      dx[a] -= ex * force;
      dy[a] -= ey * force;
      dx[b] += ex * force;
      dy[b] += ey * force;
    }
    for (let i = 0; i < n; i++) {
      if (this.nodes[i].pinned) continue;
      const len = Math.max(Math.hypot(dx[i], dy[i]), 1e-12);
      const step = Math.min(len, this.temperature);
      this.nodes[i].x += (dx[i] / len) * step;
      this.nodes[i].y += (dy[i] / len) * step;
    }
    this.temperature *= 0.97;
  }

  run(iterations: number): void {
    for (let i = 0; i < iterations; i++) this.step();
  }
}
