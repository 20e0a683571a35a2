import type { NetworkResponse, RouteQuery, RouteResponse } from './types.js';

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = 'ApiError';
  }
}

export class NoPathError extends Error {
  constructor() {
    super('no_path');
    this.name = 'NoPathError';
  }
}

/** Typed client for the routing service; every number shown in the UI comes
 * from one of these responses. */
export interface RoutesApi {
  network(): Promise<NetworkResponse>;
  route(query: RouteQuery): Promise<RouteResponse>;
}

export class HttpRoutesApi implements RoutesApi {
  constructor(private readonly baseUrl: string = '') {}

  async network(): Promise<NetworkResponse> {
    const response = await fetch(`${this.baseUrl}/network`);
    if (!response.ok) {
      throw new ApiError(`GET /network failed with ${response.status}`, response.status);
    }
    return (await response.json()) as NetworkResponse;
  }

  async route(query: RouteQuery): Promise<RouteResponse> {
    const params = new URLSearchParams({
      from_lat: String(query.fromLat),
      from_lon: String(query.fromLon),
      to_lat: String(query.toLat),
      to_lon: String(query.toLon),
      alpha: String(query.alpha),
    });
    const response = await fetch(`${this.baseUrl}/route?${params.toString()}`);
    if (response.status === 404) {
      throw new NoPathError();
    }
    if (!response.ok) {
      throw new ApiError(`GET /route failed with ${response.status}`, response.status);
    }
    return (await response.json()) as RouteResponse;
  }
}
