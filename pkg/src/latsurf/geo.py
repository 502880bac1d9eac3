"""Geodesy and planar projection: great-circle distance/latency and the
mapping from latitude/longitude to normalized mesh coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

EARTH_RADIUS_KM = 6371.0088  # IUGG mean radius
SPEED_OF_LIGHT_M_S = 299_792_458.0
FIBER_SPEED_M_S = (2.0 / 3.0) * SPEED_OF_LIGHT_M_S
# One-way propagation time through fiber, milliseconds per kilometer.
MS_PER_KM = 1.0e6 / FIBER_SPEED_M_S

WEB_MERCATOR_MAX_LAT = 85.05

PROJECTION_KINDS = ("web-mercator", "equirectangular")


class LatitudeRangeError(ValueError):
    """Latitude outside the valid range of the selected projection."""


@dataclass(frozen=True)
class GeoPoint:
    """A point on the sphere. Latitude in [-90, 90] degrees, longitude
    normalized to the half-open interval [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not math.isfinite(self.lon):
            raise ValueError(f"longitude {self.lon} is not finite")
        lon = math.fmod(self.lon + 180.0, 360.0)
        if lon < 0.0:
            lon += 360.0
        object.__setattr__(self, "lon", lon - 180.0)


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in kilometers on a sphere of mean radius
    6371.0088 km. Symmetric and non-negative."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def great_circle_latency(a: GeoPoint, b: GeoPoint) -> float:
    """One-way propagation time in milliseconds assuming light in fiber
    (two thirds of c) along the great circle."""
    return great_circle_distance(a, b) * MS_PER_KM


def _raw_project(kind: str, p: GeoPoint) -> tuple[float, float]:
    if kind == "web-mercator":
        if abs(p.lat) >= WEB_MERCATOR_MAX_LAT:
            raise LatitudeRangeError(
                f"latitude {p.lat} outside (-{WEB_MERCATOR_MAX_LAT}, {WEB_MERCATOR_MAX_LAT}) "
                "required by web-mercator"
            )
        return math.radians(p.lon), math.atanh(math.sin(math.radians(p.lat)))
    if kind == "equirectangular":
        return p.lon, p.lat
    raise ValueError(f"unknown projection kind {kind!r}")


def _raw_unproject(kind: str, x: float, y: float) -> GeoPoint:
    if kind == "web-mercator":
        return GeoPoint(lat=math.degrees(math.asin(math.tanh(y))), lon=math.degrees(x))
    if kind == "equirectangular":
        return GeoPoint(lat=y, lon=x)
    raise ValueError(f"unknown projection kind {kind!r}")


@dataclass(frozen=True)
class Projection:
    """Normalization of a raw map projection to mesh coordinates.

    The node bounding box is scaled so its larger dimension spans one
    normalized unit, then a margin is added on every side. Heights on the
    mesh share these units.
    """

    kind: str
    center_raw: tuple[float, float]   # raw-projection midpoint of the node bbox
    max_dim: float                    # larger raw bbox dimension (>0)
    half_extent: tuple[float, float]  # normalized bbox half width/height
    margin_fraction: float = 0.1

    @property
    def scale(self) -> float:
        """Factor from raw projected units to normalized units."""
        return 1.0 / self.max_dim

    @property
    def bounds(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Normalized mesh domain ((x0, y0), (x1, y1)): node bbox plus margin."""
        hx, hy = self.half_extent
        m = self.margin_fraction
        return (0.0, 0.0), (2.0 * (hx + m), 2.0 * (hy + m))


def fit_projection(points: Iterable[GeoPoint], kind: str = "web-mercator",
                   margin_fraction: float = 0.1) -> Projection:
    """Fit the normalization so all points land strictly inside bounds.

    A degenerate bounding box (single node, or coincident nodes) maps to the
    center of the unit square.
    """
    raw = [_raw_project(kind, p) for p in points]
    if not raw:
        raise ValueError("cannot fit a projection to zero points")
    xs = [r[0] for r in raw]
    ys = [r[1] for r in raw]
    cx, cy = (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0
    w, h = max(xs) - min(xs), max(ys) - min(ys)
    max_dim = max(w, h)
    if max_dim == 0.0:
        # All nodes coincide: unit-square domain, node at its center.
        return Projection(kind=kind, center_raw=(cx, cy), max_dim=1.0,
                          half_extent=(0.5 - margin_fraction, 0.5 - margin_fraction),
                          margin_fraction=margin_fraction)
    return Projection(kind=kind, center_raw=(cx, cy), max_dim=max_dim,
                      half_extent=(0.5 * w / max_dim, 0.5 * h / max_dim),
                      margin_fraction=margin_fraction)


def project(p: GeoPoint, proj: Projection) -> tuple[float, float]:
    """Map a GeoPoint to normalized mesh xy."""
    rx, ry = _raw_project(proj.kind, p)
    (x0, y0), (x1, y1) = proj.bounds
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    return (
        (rx - proj.center_raw[0]) * proj.scale + cx,
        (ry - proj.center_raw[1]) * proj.scale + cy,
    )


def unproject(xy: tuple[float, float], proj: Projection) -> GeoPoint:
    """Inverse of :func:`project` (exact up to floating point)."""
    (x0, y0), (x1, y1) = proj.bounds
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    rx = (xy[0] - cx) * proj.max_dim + proj.center_raw[0]
    ry = (xy[1] - cy) * proj.max_dim + proj.center_raw[1]
    return _raw_unproject(proj.kind, rx, ry)
