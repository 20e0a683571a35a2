"""Great-circle distances and the small planar projections used for snapping."""

from __future__ import annotations

import math

EARTH_RADIUS_M = 6_371_000.0

# Length of one degree of latitude (and of longitude at the equator).
METERS_PER_DEGREE = EARTH_RADIUS_M * math.pi / 180.0

LatLon = tuple[float, float]


def haversine_m(a: LatLon, b: LatLon) -> float:
    """Great-circle distance in meters between two (lat, lon) points."""
    lat1, lon1 = a
    lat2, lon2 = b
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def point_segment_distance_m(p: LatLon, a: LatLon, b: LatLon) -> tuple[float, float]:
    """Distance from ``p`` to the segment ``a``-``b`` plus the projection parameter.

    The segment is projected onto a local equirectangular plane whose
    longitude scale is fixed at the latitude midway between ``a`` and ``b``,
    which is accurate at city scale. Returns ``(distance_m, t)`` where ``t``
    in [0, 1] locates the closest point along the segment.
    """
    lat_ref = math.radians((a[0] + b[0]) / 2.0)
    kx = METERS_PER_DEGREE * math.cos(lat_ref)
    ky = METERS_PER_DEGREE
    dx = (b[1] - a[1]) * kx
    dy = (b[0] - a[0]) * ky
    px = (p[1] - a[1]) * kx
    py = (p[0] - a[0]) * ky
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        t = 0.0
    else:
        t = min(1.0, max(0.0, (px * dx + py * dy) / seg_sq))
    return math.hypot(px - t * dx, py - t * dy), t


def point_polyline_distance_m(p: LatLon, polyline: tuple[LatLon, ...]) -> tuple[float, float]:
    """Distance from ``p`` to a polyline and the fractional offset along it.

    The offset is measured as cumulative great-circle length up to the
    closest point, divided by total polyline length (0 for degenerate
    polylines).
    """
    if len(polyline) == 1:
        return haversine_m(p, polyline[0]), 0.0
    seg_lengths = [haversine_m(polyline[i], polyline[i + 1]) for i in range(len(polyline) - 1)]
    total = sum(seg_lengths)
    best_dist = math.inf
    best_offset = 0.0
    covered = 0.0
    for i in range(len(polyline) - 1):
        dist, t = point_segment_distance_m(p, polyline[i], polyline[i + 1])
        if dist < best_dist:
            best_dist = dist
            best_offset = covered + t * seg_lengths[i]
        covered += seg_lengths[i]
    fraction = best_offset / total if total > 0.0 else 0.0
    return best_dist, min(1.0, max(0.0, fraction))


def polyline_length_m(polyline: tuple[LatLon, ...]) -> float:
    return sum(haversine_m(polyline[i], polyline[i + 1]) for i in range(len(polyline) - 1))
