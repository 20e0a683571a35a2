import { Projection } from './projection.js';
import {
  NetworkFeature,
  ROAD_STATES,
  RouteTotals,
  STATE_COLORS,
} from './types.js';

export type RouteKind = 'fastest' | 'blended';
export type MarkerKind = 'origin' | 'destination';

const SVG_NS = 'http://www.w3.org/2000/svg';

/** Everything the planner controller can show; implemented over plain SVG/DOM. */
export interface AppView {
  drawNetwork(features: NetworkFeature[]): void;
  setNetworkVisible(visible: boolean): void;
  drawRoute(kind: RouteKind, geometry: [number, number][]): void;
  clearRoute(kind: RouteKind): void;
  setMarker(kind: MarkerKind, point: [number, number] | null): void;
  showTotals(kind: RouteKind, totals: RouteTotals | null): void;
  showBanner(message: string | null): void;
  showNotice(message: string | null): void;
}

export class SvgMapView implements AppView {
  readonly svg: SVGSVGElement;
  private readonly networkLayer: SVGGElement;
  private readonly routeLayers: Record<RouteKind, SVGGElement>;
  private readonly markerLayer: SVGGElement;
  private projection: Projection;
  private networkVisible = true;

  constructor(
    container: HTMLElement,
    private readonly panel: HTMLElement,
    private readonly banner: HTMLElement,
    private readonly notice: HTMLElement,
    readonly width = 800,
    readonly height = 600,
  ) {
    this.svg = document.createElementNS(SVG_NS, 'svg') as SVGSVGElement;
    this.svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
    this.svg.setAttribute('data-role', 'map');
    container.appendChild(this.svg);
    this.networkLayer = this.addLayer('network');
    this.routeLayers = {
      fastest: this.addLayer('route-fastest'),
      blended: this.addLayer('route-blended'),
    };
    this.markerLayer = this.addLayer('markers');
    this.projection = new Projection(0, 0, 1, 1, width, height);
  }

  private addLayer(name: string): SVGGElement {
    const layer = document.createElementNS(SVG_NS, 'g') as SVGGElement;
    layer.setAttribute('data-layer', name);
    this.svg.appendChild(layer);
    return layer;
  }

  private pathData(latLonPoints: [number, number][]): string {
    return latLonPoints
      .map(([lat, lon], index) => {
        const [x, y] = this.projection.toXY(lat, lon);
        return `${index === 0 ? 'M' : 'L'}${x.toFixed(2)} ${y.toFixed(2)}`;
      })
      .join(' ');
  }

  drawNetwork(features: NetworkFeature[]): void {
    const allPoints: [number, number][] = [];
    for (const feature of features) {
      for (const [lon, lat] of feature.geometry.coordinates) {
        allPoints.push([lat, lon]);
      }
    }
    if (allPoints.length > 0) {
      this.projection = Projection.fit(allPoints, this.width, this.height);
    }
    this.networkLayer.replaceChildren();
    for (const feature of features) {
      const path = document.createElementNS(SVG_NS, 'path');
      const latLon = feature.geometry.coordinates.map(
        ([lon, lat]) => [lat, lon] as [number, number],
      );
      path.setAttribute('d', this.pathData(latLon));
      path.setAttribute('fill', 'none');
      path.setAttribute('stroke', STATE_COLORS[feature.properties.state_est]);
      path.setAttribute('stroke-width', '3');
      path.setAttribute('data-edge-id', String(feature.properties.edge_id));
      path.setAttribute('data-state', feature.properties.state_est);
      // Hover detail: native tooltip carrying the edge risk.
      const title = document.createElementNS(SVG_NS, 'title');
      title.textContent =
        `edge ${feature.properties.edge_id} (${feature.properties.highway}): ` +
        `${feature.properties.state_est}, risk ${feature.properties.risk}, ` +
        `${feature.properties.source}`;
      path.appendChild(title);
      this.networkLayer.appendChild(path);
    }
  }

  setNetworkVisible(visible: boolean): void {
    this.networkVisible = visible;
    this.networkLayer.setAttribute('display', visible ? 'inline' : 'none');
  }

  isNetworkVisible(): boolean {
    return this.networkVisible;
  }

  drawRoute(kind: RouteKind, geometry: [number, number][]): void {
    this.clearRoute(kind);
    const path = document.createElementNS(SVG_NS, 'path');
    path.setAttribute('d', this.pathData(geometry));
    path.setAttribute('fill', 'none');
    if (kind === 'fastest') {
      path.setAttribute('stroke', '#555555');
      path.setAttribute('stroke-width', '5');
      path.setAttribute('stroke-dasharray', '10 6');
    } else {
      path.setAttribute('stroke', '#7b2ff2');
      path.setAttribute('stroke-width', '5');
    }
    path.setAttribute('data-route', kind);
    this.routeLayers[kind].appendChild(path);
  }

  clearRoute(kind: RouteKind): void {
    this.routeLayers[kind].replaceChildren();
  }

  setMarker(kind: MarkerKind, point: [number, number] | null): void {
    const existing = this.markerLayer.querySelector(`[data-marker="${kind}"]`);
    if (existing) {
      existing.remove();
    }
    if (point === null) {
      return;
    }
    const [x, y] = this.projection.toXY(point[0], point[1]);
    const circle = document.createElementNS(SVG_NS, 'circle');
    circle.setAttribute('cx', x.toFixed(2));
    circle.setAttribute('cy', y.toFixed(2));
    circle.setAttribute('r', '7');
    circle.setAttribute('fill', kind === 'origin' ? '#1b9e77' : '#d95f02');
    circle.setAttribute('data-marker', kind);
    this.markerLayer.appendChild(circle);
  }

  /** Route comparison numbers, written verbatim from the service response. */
  showTotals(kind: RouteKind, totals: RouteTotals | null): void {
    const fields: [string, number | null][] = [
      [`${kind}-time`, totals ? totals.total_time_s : null],
      [`${kind}-distance`, totals ? totals.total_distance_m : null],
      [`${kind}-risk`, totals ? totals.risk_sum : null],
    ];
    for (const [field, value] of fields) {
      const cell = this.panel.querySelector(`[data-field="${field}"]`);
      if (cell) {
        cell.textContent = value === null ? '–' : String(value);
      }
    }
  }

  showBanner(message: string | null): void {
    const text = this.banner.querySelector('[data-role="banner-text"]');
    if (text) {
      text.textContent = message ?? '';
    }
    this.banner.toggleAttribute('hidden', message === null);
  }

  showNotice(message: string | null): void {
    this.notice.textContent = message ?? '';
    this.notice.toggleAttribute('hidden', message === null);
  }

  latLonFromClient(clientX: number, clientY: number): [number, number] {
    const rect = this.svg.getBoundingClientRect();
    const width = rect.width > 0 ? rect.width : this.width;
    const height = rect.height > 0 ? rect.height : this.height;
    const x = ((clientX - rect.left) / width) * this.width;
    const y = ((clientY - rect.top) / height) * this.height;
    return this.projection.fromXY(x, y);
  }
}

export function renderLegend(container: HTMLElement): void {
  container.replaceChildren();
  for (const state of ROAD_STATES) {
    const entry = document.createElement('span');
    entry.className = 'legend-entry';
    entry.setAttribute('data-legend', state);
    const swatch = document.createElement('span');
    swatch.className = 'legend-swatch';
    swatch.style.backgroundColor = STATE_COLORS[state];
    const label = document.createElement('span');
    label.textContent = state;
    entry.append(swatch, label);
    container.appendChild(entry);
  }
}
