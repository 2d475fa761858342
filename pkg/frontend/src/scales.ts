/** Visual encodings: node radii, edge widths and topic colours.
 *
 * Radii follow a square-root scale so node AREA is proportional to the
 * organisation's investment; edge width grows monotonically with the
 * shared-project count.
 */

export const MAX_RADIUS = 26;
export const MIN_RADIUS = 2.5;
export const MAX_EDGE_WIDTH = 6;

/** radius ∝ sqrt(investment); 4x the investment doubles the radius. */
export function nodeRadius(investment: number, maxInvestment: number,
                           maxRadius: number = MAX_RADIUS): number {
  if (maxInvestment <= 0 || investment <= 0) return MIN_RADIUS;
  return Math.max(MIN_RADIUS, maxRadius * Math.sqrt(investment / maxInvestment));
}

export function nodeRadii(investments: Map<string, number>): Map<string, number> {
  let max = 0;
  for (const v of investments.values()) max = Math.max(max, v);
  const out = new Map<string, number>();
  for (const [id, v] of investments) out.set(id, nodeRadius(v, max));
  return out;
}

/** width ∝ sqrt(weight), floored at 0.75px for visibility. */
export function edgeWidth(weight: number, maxWeight: number,
                          maxWidth: number = MAX_EDGE_WIDTH): number {
  if (maxWeight <= 0 || weight <= 0) return 0.75;
  return Math.max(0.75, maxWidth * Math.sqrt(weight / maxWeight));
}

const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#2f4b7c", "#d45087",
  "#a05195", "#665191", "#ffa600", "#488f31",
];

export function topicColor(topic: number | null): string {
  if (topic === null || topic < 0) return "#888888";
  return PALETTE[topic % PALETTE.length];
}

const ORG_TYPE_COLOURS: Record<string, string> = {
  UNIVERSITY: "#4e79a7",
  RESEARCH_CENTRE: "#59a14f",
  COMPANY: "#f28e2b",
  PUBLIC_ADMIN: "#b07aa1",
  NONPROFIT: "#76b7b2",
  OTHER: "#9c755f",
};

export function orgTypeColor(orgType: string): string {
  return ORG_TYPE_COLOURS[orgType] ?? ORG_TYPE_COLOURS.OTHER;
}

export function formatEur(value: number): string {
  if (value >= 1e9) return (value / 1e9).toFixed(2) + " B€";
  if (value >= 1e6) return (value / 1e6).toFixed(2) + " M€";
  if (value >= 1e3) return (value / 1e3).toFixed(0) + " k€";
  return value.toFixed(0) + " €";
}
