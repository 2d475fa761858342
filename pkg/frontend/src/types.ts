/** Payload shapes of the read-only JSON API. */

export interface ProjectRow {
  projectId: string;
  source: string;
  acronym: string;
  title: string;
  startYear: number;
  endYear: number;
  programme: string;
  instrument: string;
  totalCost: number;
  funderContribution: number;
  priorityAreas: string[];
  topicId: number | null;
  sdgs: number[];
}

export interface ProjectsPage {
  total: number;
  offset: number;
  limit: number;
  items: ProjectRow[];
}

export interface Participant {
  orgId: string;
  name: string;
  country: string;
  province: string;
  orgType: string;
  role: string;
  contribution: number;
  isHomeRegion: boolean;
}

export interface ProjectDetail extends ProjectRow {
  abstract: string;
  topicCode: string;
  metadataTags: string[];
  topicLabel: string | null;
  priorityConfidence: Record<string, number>;
  sdgPhrases: Record<string, string[]>;
  mapXY: [number, number] | null;
  participants: Participant[];
}

export interface NetworkNode {
  id: string;
  name: string;
  orgType: string;
  investment: number;
  projects: number;
}

export interface NetworkEdge {
  source: string;
  target: string;
  weight: number;
}

export interface NetworkPayload {
  nodes: NetworkNode[];
  edges: NetworkEdge[];
}

export interface MapPoint {
  id: string;
  x: number;
  y: number;
  topic: number | null;
  title: string;
  matched: boolean;
}

export interface MapPayload {
  points: MapPoint[];
}

export interface ParticipantRank {
  orgId: string;
  name: string;
  orgType: string;
  investment: number;
  projectCount: number;
}

export interface ExternalPartner {
  orgId: string;
  name: string;
  country: string;
  sharedProjects: number;
  homePartners: string[];
}

export interface StatsPayload {
  nProjects: number;
  nParticipants: number;
  totalInvestment: number;
  byYear: Record<string, number>;
  byArea: Record<string, number>;
  byTopic: Record<string, number>;
  bySdg: Record<string, number>;
  byOrgType: Record<string, number>;
  topParticipants: ParticipantRank[];
  externalPartners: ExternalPartner[];
}

export interface TopicMeta {
  id: number;
  label: string;
  size: number;
}

export interface MetaPayload {
  nProjects: number;
  homeCountry: string;
  facets: {
    years: number[];
    provinces: string[];
    instruments: string[];
    programmes: string[];
    priorityAreas: string[];
    topics: TopicMeta[];
    sdgs: number[];
    orgTypes: string[];
  };
  facetCounts: Record<string, Record<string, number>>;
  manifest: Record<string, unknown>;
}
