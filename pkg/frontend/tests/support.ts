import { RoutesApi } from '../src/api.js';
import { SvgMapView } from '../src/render.js';
import {
  NetworkFeature,
  NetworkResponse,
  RoadStateName,
  RouteQuery,
  RouteResponse,
} from '../src/types.js';

export function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (error: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export class MockApi implements RoutesApi {
  networkCalls = 0;
  routeCalls: RouteQuery[] = [];
  networkHandler: () => Promise<NetworkResponse> = async () => networkOf([]);
  routeHandler: (query: RouteQuery) => Promise<RouteResponse> = async (query) =>
    routeOf(query.alpha);

  network(): Promise<NetworkResponse> {
    this.networkCalls += 1;
    return this.networkHandler();
  }

  route(query: RouteQuery): Promise<RouteResponse> {
    this.routeCalls.push(query);
    return this.routeHandler(query);
  }
}

export function featureOf(
  edgeId: number,
  state: RoadStateName,
  coordinates: [number, number][],
  risk = 1.0,
): NetworkFeature {
  return {
    type: 'Feature',
    geometry: { type: 'LineString', coordinates },
    properties: {
      edge_id: edgeId,
      highway: 'residential',
      state_est: state,
      risk,
      source: 'measured',
    },
  };
}

export function networkOf(features: NetworkFeature[]): NetworkResponse {
  return { type: 'FeatureCollection', features };
}

/** Mirrors the icy-shortcut fixture: low alpha rides the icy edge, alpha >= 5
 * takes the longer dry detour with a lower risk sum. */
export function routeOf(alpha: number): RouteResponse {
  if (alpha >= 5) {
    return {
      geometry: [
        [69.0, 17.0],
        [69.0005, 17.004],
        [69.001, 17.0],
      ],
      total_time_s: 60,
      total_distance_m: 360,
      risk_sum: 12,
      alpha,
      edges: [
        { edge_id: 2, state: 'Dry', risk: 0.2 },
        { edge_id: 4, state: 'Dry', risk: 0.2 },
      ],
    };
  }
  return {
    geometry: [
      [69.0, 17.0],
      [69.001, 17.0],
    ],
    total_time_s: 10,
    total_distance_m: 111,
    risk_sum: 32,
    alpha,
    edges: [{ edge_id: 0, state: 'Icy', risk: 3.2 }],
  };
}

export interface Harness {
  api: MockApi;
  view: SvgMapView;
  map: HTMLElement;
  panel: HTMLElement;
  banner: HTMLElement;
  notice: HTMLElement;
  legend: HTMLElement;
}

export function setupDom(): Harness {
  document.body.innerHTML = `
    <div id="map"></div>
    <div id="banner" hidden>
      <span data-role="banner-text"></span>
      <button id="retry" type="button">Retry</button>
    </div>
    <div id="notice" hidden></div>
    <div id="legend"></div>
    <table id="panel"><tbody>
      <tr>
        <td data-field="fastest-time">–</td>
        <td data-field="blended-time">–</td>
      </tr>
      <tr>
        <td data-field="fastest-distance">–</td>
        <td data-field="blended-distance">–</td>
      </tr>
      <tr>
        <td data-field="fastest-risk">–</td>
        <td data-field="blended-risk">–</td>
      </tr>
    </tbody></table>
  `;
  const map = document.getElementById('map') as HTMLElement;
  const panel = document.getElementById('panel') as HTMLElement;
  const banner = document.getElementById('banner') as HTMLElement;
  const notice = document.getElementById('notice') as HTMLElement;
  const legend = document.getElementById('legend') as HTMLElement;
  const view = new SvgMapView(map, panel, banner, notice);
  return { api: new MockApi(), view, map, panel, banner, notice, legend };
}

export function networkPaths(map: HTMLElement): Element[] {
  return [...map.querySelectorAll('[data-layer="network"] path')];
}

export function routePath(map: HTMLElement, kind: string): Element | null {
  return map.querySelector(`[data-layer="route-${kind}"] path`);
}

export function fieldText(panel: HTMLElement, field: string): string {
  return panel.querySelector(`[data-field="${field}"]`)?.textContent ?? '';
}
