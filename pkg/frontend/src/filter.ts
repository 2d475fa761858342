/** Filter state, its canonical query-string form and URL round-tripping.
 *
 * The canonical serialization fixes key order and sorts values inside a
 * facet, so serialize(deserialize(url)) === url for every canonical URL
 * and deserialize(serialize(state)) is the identity on states.
 */

export interface FilterState {
  q: string[];
  participant: string;
  type: string[];
  year: number[];
  province: string[];
  instrument: string[];
  programme: string[];
  area: string[];
  topic: number[];
  sdg: number[];
}

export type ViewName = "network" | "map";

export interface ViewState {
  view: ViewName;
  filter: FilterState;
}

export function emptyFilter(): FilterState {
  return {
    q: [],
    participant: "",
    type: [],
    year: [],
    province: [],
    instrument: [],
    programme: [],
    area: [],
    topic: [],
    sdg: [],
  };
}

export function isEmptyFilter(f: FilterState): boolean {
  return (
    f.q.length === 0 && f.participant === "" && f.type.length === 0 &&
    f.year.length === 0 && f.province.length === 0 &&
    f.instrument.length === 0 && f.programme.length === 0 &&
    f.area.length === 0 && f.topic.length === 0 && f.sdg.length === 0
  );
}

export function cloneFilter(f: FilterState): FilterState {
  return JSON.parse(JSON.stringify(f)) as FilterState;
}

function sortedStrings(values: string[]): string[] {
  return [...new Set(values)].sort();
}

function sortedNumbers(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

/** Normalise value ordering; `q` keeps user order (it is a phrase list). */
export function canonicalFilter(f: FilterState): FilterState {
  return {
    q: f.q.filter((t) => t.trim() !== ""),
    participant: f.participant.trim(),
    type: sortedStrings(f.type),
    year: sortedNumbers(f.year),
    province: sortedStrings(f.province),
    instrument: sortedStrings(f.instrument),
    programme: sortedStrings(f.programme),
    area: sortedStrings(f.area),
    topic: sortedNumbers(f.topic),
    sdg: sortedNumbers(f.sdg),
  };
}

/** Repeated-parameter encoding understood by every API endpoint. */
export function filterToParams(f: FilterState): URLSearchParams {
  const c = canonicalFilter(f);
  const params = new URLSearchParams();
  for (const term of c.q) params.append("q", term);
  if (c.participant) params.append("participant", c.participant);
  for (const v of c.type) params.append("type", v);
  for (const v of c.year) params.append("year", String(v));
  for (const v of c.province) params.append("province", v);
  for (const v of c.instrument) params.append("instrument", v);
  for (const v of c.programme) params.append("programme", v);
  for (const v of c.area) params.append("area", v);
  for (const v of c.topic) params.append("topic", String(v));
  for (const v of c.sdg) params.append("sdg", String(v));
  return params;
}

function parseInts(values: string[], lo: number, hi: number): number[] {
  const out: number[] = [];
  for (const v of values) {
    const n = Number(v);
    if (Number.isInteger(n) && n >= lo && n <= hi) {
      out.push(n);
    } else {
      console.warn(`ignoring invalid filter value ${v}`);
    }
  }
  return out;
}

export function filterFromParams(params: URLSearchParams): FilterState {
  return canonicalFilter({
    q: params.getAll("q"),
    participant: params.get("participant") ?? "",
    type: params.getAll("type"),
    year: parseInts(params.getAll("year"), 1900, 2100),
    province: params.getAll("province"),
    instrument: params.getAll("instrument"),
    programme: params.getAll("programme"),
    area: params.getAll("area"),
    topic: parseInts(params.getAll("topic"), 0, 10_000),
    sdg: parseInts(params.getAll("sdg"), 1, 17),
  });
}

/** Full view state <-> URL search string (leading "?" omitted). */
export function serializeViewState(state: ViewState): string {
  const params = filterToParams(state.filter);
  const out = new URLSearchParams();
  out.append("view", state.view);
  for (const [k, v] of params) out.append(k, v);
  return out.toString();
}

export function deserializeViewState(search: string): ViewState {
  const params = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
  const view = params.get("view") === "map" ? "map" : "network";
  return { view, filter: filterFromParams(params) };
}
