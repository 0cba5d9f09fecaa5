"""Small 3D geometry kit: planes, convex polygons, mirrors.

Everything works on float64 numpy arrays of shape (3,). Polygons are convex,
planar, and wound counter-clockwise around their outward normal.
"""

from __future__ import annotations

import math

import numpy as np

COPLANARITY_TOL = 1e-9  # m
MIN_AREA = 1e-12  # m^2


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize a vector; raises on (near-)zero input."""
    n = float(np.linalg.norm(v))
    if n < 1e-300:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def polygon_frame(vertices: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit normal (right-hand rule over the winding) and area of a polygon.

    Uses Newell's method, which is exact for planar polygons and stable for
    nearly planar ones.
    """
    v = np.asarray(vertices, dtype=float)
    nxt = np.roll(v, -1, axis=0)
    normal = np.sum(np.cross(v, nxt), axis=0)
    doubled_area = float(np.linalg.norm(normal))
    if doubled_area < 2 * MIN_AREA:
        raise ValueError("degenerate polygon (area below minimum)")
    return normal / doubled_area, doubled_area / 2


def validate_convex_polygon(vertices: np.ndarray) -> tuple[np.ndarray, float]:
    """Check planarity, convexity, and non-degeneracy; return (normal, area)."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
        raise ValueError("polygon needs an (n, 3) array with n >= 3")
    normal, area = polygon_frame(v)
    offsets = (v - v[0]) @ normal
    if np.max(np.abs(offsets)) > COPLANARITY_TOL:
        raise ValueError(
            f"vertices not coplanar within {COPLANARITY_TOL} m "
            f"(max offset {np.max(np.abs(offsets)):.3g} m)"
        )
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths < 1e-12):
        raise ValueError("polygon has a zero-length edge")
    turns = np.cross(edges, np.roll(edges, -1, axis=0)) @ normal
    if np.any(turns < -1e-9 * lengths.max() ** 2):
        raise ValueError("polygon is not convex (or winding is inconsistent)")
    return normal, area


def point_in_convex_polygon(
    point: np.ndarray,
    vertices: np.ndarray,
    normal: np.ndarray,
    tol: float = 1e-9,
) -> bool:
    """Half-plane test against every edge; boundary counts as inside.

    Assumes ``point`` lies (near) the polygon plane.
    """
    v = np.asarray(vertices, dtype=float)
    edges = np.roll(v, -1, axis=0) - v
    rel = np.asarray(point, dtype=float) - v
    side = np.cross(edges, rel) @ normal
    scale = np.linalg.norm(edges, axis=1)
    return bool(np.all(side >= -tol * np.maximum(scale, 1.0)))


def mirror_point(point: np.ndarray, plane_point: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Reflect a point across the plane (plane_point, unit normal)."""
    d = float((np.asarray(point, dtype=float) - plane_point) @ normal)
    return point - 2 * d * normal


def reflect_direction(direction: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Specular reflection of a direction vector about a unit normal."""
    return direction - 2 * float(direction @ normal) * normal


def ray_plane_parameter(
    origin: np.ndarray,
    direction: np.ndarray,
    plane_point: np.ndarray,
    normal: np.ndarray,
) -> float | None:
    """Parameter t with origin + t*direction on the plane; None if parallel."""
    denom = float(direction @ normal)
    if abs(denom) < 1e-12 * float(np.linalg.norm(direction)):
        return None
    return float((plane_point - origin) @ normal) / denom


def incident_angle(direction: np.ndarray, normal: np.ndarray) -> float:
    """Angle in [0, pi/2) between the reversed incoming ray and the normal.

    Both inputs must be unit vectors (within 1e-9). The surface is treated as
    two-sided, so the result never exceeds pi/2; a direction lying exactly in
    the surface plane is rejected as degenerate.
    """
    d = np.asarray(direction, dtype=float)
    n = np.asarray(normal, dtype=float)
    for name, vec in (("direction", d), ("normal", n)):
        if abs(float(np.linalg.norm(vec)) - 1.0) > 1e-9:
            raise ValueError(f"{name} must be a unit vector (within 1e-9)")
    cos_t = abs(float(d @ n))
    if cos_t == 0.0:
        raise ValueError("direction is parallel to the surface (grazing)")
    return math.acos(min(cos_t, 1.0))


def aabb_contains(
    lower: np.ndarray, upper: np.ndarray, point: np.ndarray, tol: float = 1e-9
) -> bool:
    p = np.asarray(point, dtype=float)
    return bool(np.all(p >= lower - tol) and np.all(p <= upper + tol))
