/** Typed client for the exploration API with latest-wins request control.
 *
 * Each logical endpoint is a channel: issuing a new request on a channel
 * aborts the previous in-flight one, so stale responses never overwrite
 * newer state while rapid filter changes are applied.
 */

import { FilterState, filterToParams } from "./filter.js";
import {
  MapPayload,
  MetaPayload,
  NetworkPayload,
  ProjectDetail,
  ProjectsPage,
  StatsPayload,
} from "./types.js";

export type FetchLike = typeof fetch;

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`API ${status}: ${detail}`);
  }
}

/** Resolves to null when a newer request superseded this one. */
export class LatestWins {
  private controllers = new Map<string, AbortController>();

  constructor(private fetchImpl: FetchLike) {}

  async getJson<T>(channel: string, url: string): Promise<T | null> {
    this.controllers.get(channel)?.abort();
    const controller = new AbortController();
    this.controllers.set(channel, controller);
    let response: Response;
    try {
      response = await this.fetchImpl(url, { signal: controller.signal });
    } catch (err) {
      if (controller.signal.aborted) return null;
      throw err;
    }
    if (this.controllers.get(channel) !== controller) return null;
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* body was not JSON */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }
}

export class ApiClient {
  private channels: LatestWins;

  constructor(public baseUrl: string = "", fetchImpl: FetchLike = fetch) {
    this.channels = new LatestWins(fetchImpl);
  }

  private url(path: string, filter?: FilterState, extra?: Record<string, string>): string {
    const params = filter ? filterToParams(filter) : new URLSearchParams();
    for (const [k, v] of Object.entries(extra ?? {})) params.append(k, v);
    const qs = params.toString();
    return `${this.baseUrl}${path}${qs ? "?" + qs : ""}`;
  }

  meta(): Promise<MetaPayload | null> {
    return this.channels.getJson("meta", this.url("/api/meta"));
  }

  projects(filter: FilterState, offset = 0, limit = 50): Promise<ProjectsPage | null> {
    return this.channels.getJson(
      "projects",
      this.url("/api/projects", filter, { offset: String(offset), limit: String(limit) }),
    );
  }

  projectDetail(id: string): Promise<ProjectDetail | null> {
    return this.channels.getJson("detail", this.url(`/api/projects/${encodeURIComponent(id)}`));
  }

  network(filter: FilterState): Promise<NetworkPayload | null> {
    return this.channels.getJson("network", this.url("/api/network", filter));
  }

  map(filter: FilterState): Promise<MapPayload | null> {
    return this.channels.getJson("map", this.url("/api/map", filter));
  }

  stats(filter: FilterState): Promise<StatsPayload | null> {
    return this.channels.getJson("stats", this.url("/api/stats", filter));
  }

  /** Plain URL for the download link; the browser streams the CSV itself. */
  exportUrl(view: string, filter: FilterState): string {
    return this.url(`/api/export/${view}.csv`, filter);
  }
}
