"""Geodesic helpers: haversine distance and a local equirectangular projection."""

import math

EARTH_RADIUS_KM = 6371.0088
EARTH_RADIUS_M = EARTH_RADIUS_KM * 1000.0
METERS_PER_DEG_LAT = math.pi / 180.0 * EARTH_RADIUS_M


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters between two WGS84 points."""
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def haversine_km(lat1, lon1, lat2, lon2):
    return haversine_m(lat1, lon1, lat2, lon2) / 1000.0


def meters_per_deg_lon(at_lat):
    """East-west meters per degree of longitude at the given latitude."""
    return METERS_PER_DEG_LAT * math.cos(math.radians(at_lat))


def to_local_m(lat, lon, anchor_lat, anchor_lon):
    """Project a point to (x_east_m, y_north_m) relative to an anchor.

    Equirectangular with the longitude scale frozen at the anchor latitude,
    so the mapping is exactly invertible.
    """
    x = (lon - anchor_lon) * meters_per_deg_lon(anchor_lat)
    y = (lat - anchor_lat) * METERS_PER_DEG_LAT
    return x, y


def from_local_m(x, y, anchor_lat, anchor_lon):
    lat = anchor_lat + y / METERS_PER_DEG_LAT
    lon = anchor_lon + x / meters_per_deg_lon(anchor_lat)
    return lat, lon


def point_segment_distance(px, py, ax, ay, bx, by):
    """Distance from point P to segment AB in the plane."""
    abx = bx - ax
    aby = by - ay
    apx = px - ax
    apy = py - ay
    denom = abx * abx + aby * aby
    if denom == 0.0:
        return math.hypot(apx, apy)
    t = (apx * abx + apy * aby) / denom
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * abx), py - (ay + t * aby))
