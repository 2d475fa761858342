/** Central view state: one refetch per endpoint on every filter change.
 *
 * The active view's payload and the statistics panels refresh together;
 * the API client's latest-wins channels cancel anything superseded.
 */

import { ApiClient } from "./api.js";
import {
  FilterState,
  ViewName,
  ViewState,
  cloneFilter,
  deserializeViewState,
  emptyFilter,
  serializeViewState,
} from "./filter.js";
import {
  MapPayload,
  MetaPayload,
  NetworkPayload,
  ProjectsPage,
  StatsPayload,
} from "./types.js";

export interface Snapshot {
  view: ViewName;
  filter: FilterState;
  meta: MetaPayload | null;
  network: NetworkPayload | null;
  map: MapPayload | null;
  stats: StatsPayload | null;
  table: ProjectsPage | null;
  tableOffset: number;
  selectedOrg: string | null;
  selectedProject: string | null;
}

type Listener = (snapshot: Snapshot) => void;

export const TABLE_PAGE_SIZE = 12;

export class AppStore {
  private state: Snapshot = {
    view: "network",
    filter: emptyFilter(),
    meta: null,
    network: null,
    map: null,
    stats: null,
    table: null,
    tableOffset: 0,
    selectedOrg: null,
    selectedProject: null,
  };
  private listeners: Listener[] = [];

  constructor(private api: ApiClient,
              private onUrlChange: (search: string) => void = () => {}) {}

  get snapshot(): Snapshot {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  async init(search: string): Promise<void> {
    const { view, filter } = deserializeViewState(search);
    this.state.view = view;
    this.state.filter = filter;
    this.state.meta = await this.api.meta();
    await this.refresh();
  }

  urlSearch(): string {
    return serializeViewState({ view: this.state.view, filter: this.state.filter });
  }

  async setFilter(filter: FilterState): Promise<void> {
    this.state.filter = cloneFilter(filter);
    this.state.tableOffset = 0;
    this.onUrlChange(this.urlSearch());
    await this.refresh();
  }

  async setView(view: ViewName): Promise<void> {
    if (view === this.state.view) return;
    this.state.view = view;
    this.onUrlChange(this.urlSearch());
    await this.refresh();
  }

  async setTableOffset(offset: number): Promise<void> {
    this.state.tableOffset = Math.max(0, offset);
    this.state.table = await this.api.projects(
      this.state.filter, this.state.tableOffset, TABLE_PAGE_SIZE);
    this.emit();
  }

  selectOrg(orgId: string | null): void {
    this.state.selectedOrg = orgId;
    this.emit();
  }

  selectProject(projectId: string | null): void {
    this.state.selectedProject = projectId;
    this.emit();
  }

  /** One request per endpoint: active view payload, stats, table page. */
  async refresh(): Promise<void> {
    const filter = this.state.filter;
    const viewPromise: Promise<unknown> = this.state.view === "network"
      ? this.api.network(filter).then((p) => { if (p) this.state.network = p; })
      : this.api.map(filter).then((p) => { if (p) this.state.map = p; });
    const statsPromise = this.api.stats(filter).then((p) => {
      if (p) this.state.stats = p;
    });
    const tablePromise = this.api.projects(filter, this.state.tableOffset,
                                           TABLE_PAGE_SIZE).then((p) => {
      if (p) this.state.table = p;
    });
    await Promise.all([viewPromise, statsPromise, tablePromise]);
    this.emit();
  }

  exportUrl(view: string): string {
    return this.api.exportUrl(view, this.state.filter);
  }
}
