export type RoadStateName = 'Dry' | 'Moist' | 'Wet' | 'Icy' | 'Snowy' | 'Slushy';

export interface RouteEdge {
  edge_id: number;
  state: RoadStateName;
  risk: number;
}

export interface RouteResponse {
  geometry: [number, number][]; // [lat, lon] pairs
  total_time_s: number;
  total_distance_m: number;
  risk_sum: number;
  alpha: number;
  edges: RouteEdge[];
}

export interface NetworkFeature {
  type: 'Feature';
  geometry: {
    type: 'LineString';
    coordinates: [number, number][]; // GeoJSON order: [lon, lat]
  };
  properties: {
    edge_id: number;
    highway: string;
    state_est: RoadStateName;
    risk: number;
    source: string;
  };
}

export interface NetworkResponse {
  type: 'FeatureCollection';
  features: NetworkFeature[];
}

export interface RouteQuery {
  fromLat: number;
  fromLon: number;
  toLat: number;
  toLon: number;
  alpha: number;
}

export interface RouteTotals {
  total_time_s: number;
  total_distance_m: number;
  risk_sum: number;
}

/** Fixed legend colors, one per road state. */
export const STATE_COLORS: Record<RoadStateName, string> = {
  Dry: '#2e8b57',
  Moist: '#9acd32',
  Wet: '#2b6cd4',
  Icy: '#d62728',
  Snowy: '#cfd6dd',
  Slushy: '#f28e2b',
};

export const ROAD_STATES: RoadStateName[] = ['Dry', 'Moist', 'Wet', 'Icy', 'Snowy', 'Slushy'];
