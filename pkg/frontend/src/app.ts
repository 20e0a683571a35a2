import { NoPathError, RoutesApi } from './api.js';
import { AppView, RouteKind } from './render.js';

/** Interaction state: pick two points, compare fastest vs safety-weighted.
 *
 * The first click sets the origin, the second sets the destination and
 * issues both route queries (alpha=0 and the slider alpha); a third click
 * restarts with a fresh origin. Slider moves re-query only the blended
 * route. Every request carries a sequence number per route kind and a
 * response is dropped unless it answers the latest issued request, so
 * out-of-order arrivals can never put stale numbers on screen.
 */
export class RoutePlanner {
  private origin: [number, number] | null = null;
  private destination: [number, number] | null = null;
  private alphaValue: number;
  private readonly sequence: Record<RouteKind, number> = { fastest: 0, blended: 0 };
  private readonly inFlight: Set<Promise<void>> = new Set();

  constructor(
    private readonly api: RoutesApi,
    private readonly view: AppView,
    initialAlpha = 2,
  ) {
    this.alphaValue = initialAlpha;
  }

  get alpha(): number {
    return this.alphaValue;
  }

  get endpoints(): { origin: [number, number] | null; destination: [number, number] | null } {
    return { origin: this.origin, destination: this.destination };
  }

  /** Resolves when every request issued so far has settled (for tests). */
  async settled(): Promise<void> {
    while (this.inFlight.size > 0) {
      await Promise.all([...this.inFlight]);
    }
  }

  async loadNetwork(): Promise<void> {
    try {
      const network = await this.api.network();
      this.view.drawNetwork(network.features);
      this.view.showBanner(null);
    } catch (error) {
      this.view.showBanner(`failed to load network: ${describe(error)}`);
    }
  }

  mapClick(lat: number, lon: number): void {
    if (this.origin === null || this.destination !== null) {
      // First click, or a restart after a complete pair.
      this.origin = [lat, lon];
      this.destination = null;
      this.view.setMarker('origin', this.origin);
      this.view.setMarker('destination', null);
      this.view.clearRoute('fastest');
      this.view.clearRoute('blended');
      this.view.showTotals('fastest', null);
      this.view.showTotals('blended', null);
      this.view.showNotice(null);
      return;
    }
    this.destination = [lat, lon];
    this.view.setMarker('destination', this.destination);
    this.request('fastest', 0);
    this.request('blended', this.alphaValue);
  }

  setAlpha(alpha: number): void {
    this.alphaValue = alpha;
    if (this.origin !== null && this.destination !== null) {
      this.request('blended', alpha);
    }
  }

  private request(kind: RouteKind, alpha: number): void {
    if (this.origin === null || this.destination === null) {
      return;
    }
    const ticket = ++this.sequence[kind];
    const [fromLat, fromLon] = this.origin;
    const [toLat, toLon] = this.destination;
    const task = this.api
      .route({ fromLat, fromLon, toLat, toLon, alpha })
      .then((route) => {
        if (ticket !== this.sequence[kind]) {
          return; // a newer request was issued; discard this answer
        }
        this.view.drawRoute(kind, route.geometry);
        this.view.showTotals(kind, {
          total_time_s: route.total_time_s,
          total_distance_m: route.total_distance_m,
          risk_sum: route.risk_sum,
        });
        this.view.showNotice(null);
      })
      .catch((error) => {
        if (ticket !== this.sequence[kind]) {
          return;
        }
        this.view.clearRoute(kind);
        this.view.showTotals(kind, null);
        if (error instanceof NoPathError) {
          this.view.showNotice('No route exists between these points.');
        } else {
          this.view.showNotice(`route request failed: ${describe(error)}`);
        }
      });
    const tracked = task.finally(() => this.inFlight.delete(tracked));
    this.inFlight.add(tracked);
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
