"""Regenerate the synthetic sample dataset under data/sample/.

A 3x3 street grid around central Narvik plus two days of sensor sweeps and
daily weather. The south-west corner is kept icy so the sample routes show a
real time-vs-safety tradeoff.
"""

from __future__ import annotations

import csv
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "sample"

LATS = [68.444, 68.441, 68.438]
LONS = [17.420, 17.426, 17.432]


def node_id(row: int, col: int) -> int:
    return 101 + row * 3 + col


def write_osm() -> None:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="sample">']
    for r, lat in enumerate(LATS):
        for c, lon in enumerate(LONS):
            nid = node_id(r, c)
            ele = 10 + 6 * r + 2 * c
            lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}">')
            lines.append(f'    <tag k="ele" v="{ele}"/>')
            lines.append("  </node>")
    way_id = 500
    # South and west roads are fast primaries through the icy corner; the
    # middle streets are slow residentials, so routing has a real tradeoff.
    specs = [
        ([node_id(0, 0), node_id(0, 1), node_id(0, 2)], "residential", {}),
        ([node_id(1, 0), node_id(1, 1), node_id(1, 2)], "residential", {}),
        ([node_id(2, 0), node_id(2, 1), node_id(2, 2)], "primary", {"maxspeed": "70"}),
        ([node_id(0, 0), node_id(1, 0), node_id(2, 0)], "primary", {"maxspeed": "70"}),
        ([node_id(0, 1), node_id(1, 1), node_id(2, 1)], "residential", {}),
        ([node_id(0, 2), node_id(1, 2), node_id(2, 2)], "residential", {"oneway": "yes"}),
    ]
    for refs, highway, tags in specs:
        way_id += 1
        lines.append(f'  <way id="{way_id}">')
        for ref in refs:
            lines.append(f'    <nd ref="{ref}"/>')
        lines.append(f'    <tag k="highway" v="{highway}"/>')
        for key, value in tags.items():
            lines.append(f'    <tag k="{key}" v="{value}"/>')
        lines.append("  </way>")
    lines.append("</osm>")
    (OUT / "narvik_mini.osm.xml").write_text("\n".join(lines) + "\n", encoding="utf-8")


def interpolate(a: tuple[float, float], b: tuple[float, float], t: float) -> tuple[float, float]:
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def write_sensors() -> None:
    rng = random.Random(2021)
    corner = {(2, 0)}  # icy around the south-west corner
    segments = []
    for r in range(3):
        for c in range(2):
            segments.append(((r, c), (r, c + 1)))
    for r in range(2):
        for c in range(3):
            segments.append(((r, c), (r + 1, c)))

    rows = []
    for day, hour0 in (("2021-03-01", 8), ("2021-03-02", 9)):
        for index, (start, end) in enumerate(segments):
            a = (LATS[start[0]], LONS[start[1]])
            b = (LATS[end[0]], LONS[end[1]])
            for step in range(2):
                t = 0.25 + 0.5 * step
                lat, lon = interpolate(a, b, t)
                icy = start in corner or end in corner
                if icy:
                    friction = round(rng.uniform(0.12, 0.2), 3)
                    state = 4
                    tsurf = round(rng.uniform(-9.0, -5.0), 1)
                else:
                    friction = round(rng.uniform(0.55, 0.78), 3)
                    state = rng.choice([1, 1, 2, 3])
                    tsurf = round(rng.uniform(-4.0, 0.5), 1)
                minute = (index * 2 + step) % 60
                rows.append(
                    [
                        f"{day}T{hour0:02d}:{minute:02d}:00Z",
                        f"{lat:.6f}",
                        f"{lon:.6f}",
                        friction,
                        state,
                        round(tsurf + rng.uniform(0.5, 2.0), 1),
                        tsurf,
                        round(rng.uniform(0.0, 1.2), 2),
                        round(rng.uniform(15, 45), 1),
                        round(rng.uniform(8, 40), 1),
                        round(rng.uniform(0.5, 3.0), 2),
                    ]
                )
    with open(OUT / "sensors.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "timestamp",
                "lat",
                "lon",
                "friction",
                "state",
                "ta_c",
                "tsurf_c",
                "water_mm",
                "speed",
                "height_m",
                "accuracy",
            ]
        )
        writer.writerows(rows)


def write_weather() -> None:
    rng = random.Random(7)
    header = [
        "lat",
        "lon",
        "date",
        "maxtemp_c",
        "mintemp_c",
        "temp_c",
        "dewpoint_c",
        "heatindex_c",
        "total_snow_cm",
        "sun_hour",
        "uv_index",
        "uv",
        "wind_gust_kmph",
        "windspeed_kmph",
        "winddir_degree",
        "cloudcover",
        "humidity",
        "precip_mm",
        "pressure",
        "visibility",
    ]
    rows = []
    for day in ("2021-03-01", "2021-03-02"):
        for lat in LATS:
            for lon in LONS:
                low = round(rng.uniform(-9, -4), 1)
                high = round(low + rng.uniform(2, 5), 1)
                rows.append(
                    [
                        f"{lat:.4f}",
                        f"{lon:.4f}",
                        day,
                        high,
                        low,
                        round((low + high) / 2, 1),
                        round(low - 2, 1),
                        round((low + high) / 2, 1),
                        round(rng.uniform(0, 4), 1),
                        round(rng.uniform(1, 6), 1),
                        1.0,
                        1.0,
                        round(rng.uniform(20, 60), 1),
                        round(rng.uniform(5, 30), 1),
                        round(rng.uniform(0, 359), 0),
                        round(rng.uniform(40, 100), 0),
                        round(rng.uniform(55, 95), 0),
                        round(rng.uniform(0, 2), 1),
                        round(rng.uniform(990, 1030), 0),
                        round(rng.uniform(2, 10), 1),
                    ]
                )
    with open(OUT / "weather.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_config() -> None:
    config = {
        "paths": {
            "sensor_csv": "sensors.csv",
            "weather_csv": "weather.csv",
            "osm_xml": "narvik_mini.osm.xml",
            "classifier_model": "../../build/classifier.json",
            "regressor_model": "../../build/regressor.json",
        },
        "feature_list": ["ta_c", "tsurf_c", "water_mm", "speed", "height_m"],
        "k": 5,
        "default_alpha": 1.0,
        "snap_radius_m": 50.0,
        "join_radius_m": 5000.0,
        "test_fraction": 0.25,
        "seed": 0,
        "fallback_mode": "optimistic",
        "server": {"host": "127.0.0.1", "port": 8640, "static_dir": "../../frontend/dist"},
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    write_osm()
    write_sensors()
    write_weather()
    write_config()
    print(f"wrote sample dataset to {OUT}")


if __name__ == "__main__":
    main()
