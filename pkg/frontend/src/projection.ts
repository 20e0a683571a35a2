/** Equirectangular fit of a lat/lon bounding box onto an SVG viewport. */
export class Projection {
  private readonly scale: number;
  private readonly midLat: number;
  private readonly lonScale: number;

  constructor(
    readonly minLat: number,
    readonly minLon: number,
    readonly maxLat: number,
    readonly maxLon: number,
    readonly width: number,
    readonly height: number,
    readonly padding = 16,
  ) {
    this.midLat = (minLat + maxLat) / 2;
    this.lonScale = Math.cos((this.midLat * Math.PI) / 180);
    const spanX = Math.max((maxLon - minLon) * this.lonScale, 1e-9);
    const spanY = Math.max(maxLat - minLat, 1e-9);
    this.scale = Math.min(
      (width - 2 * padding) / spanX,
      (height - 2 * padding) / spanY,
    );
  }

  static fit(points: [number, number][], width: number, height: number): Projection {
    if (points.length === 0) {
      return new Projection(0, 0, 1, 1, width, height);
    }
    let minLat = Infinity;
    let minLon = Infinity;
    let maxLat = -Infinity;
    let maxLon = -Infinity;
    for (const [lat, lon] of points) {
      minLat = Math.min(minLat, lat);
      minLon = Math.min(minLon, lon);
      maxLat = Math.max(maxLat, lat);
      maxLon = Math.max(maxLon, lon);
    }
    return new Projection(minLat, minLon, maxLat, maxLon, width, height);
  }

  toXY(lat: number, lon: number): [number, number] {
    const x = this.padding + (lon - this.minLon) * this.lonScale * this.scale;
    const y = this.height - this.padding - (lat - this.minLat) * this.scale;
    return [x, y];
  }

  fromXY(x: number, y: number): [number, number] {
    const lon = (x - this.padding) / (this.lonScale * this.scale) + this.minLon;
    const lat = (this.height - this.padding - y) / this.scale + this.minLat;
    return [lat, lon];
  }
}
