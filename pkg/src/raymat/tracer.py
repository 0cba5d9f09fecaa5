"""Deterministic image-method ray tracing for multi-bounce specular paths.

For every ordered facet sequence up to the bounce limit, the transmitter is
mirrored successively across the facet planes, the straight line from the last
image to the receiver is folded back through the chain, and the resulting
reflection points are validated (inside the polygon, genuine crossings, and no
leg occluded by any other facet). Facets reflect on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .geometry import (
    incident_angle,
    mirror_point,
    point_in_convex_polygon,
    ray_plane_parameter,
    unit,
)
from .scene import Facet, Scene

OCCLUSION_EPS = 1e-6  # m; keeps reflection points from occluding their own legs

__all__ = [
    "Hop",
    "Trajectory",
    "trace",
    "incident_angle",
    "check_settling",
    "OCCLUSION_EPS",
]


@dataclass(frozen=True, eq=False)
class Hop:
    """One specular reflection: where, off which facet, at what angle."""

    point: np.ndarray
    facet_id: str
    theta_i: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A TX-to-RX specular path with ordered reflection points."""

    tx: np.ndarray
    rx: np.ndarray
    hops: tuple[Hop, ...]
    segment_lengths: tuple[float, ...]
    total_length: float

    @property
    def bounces(self) -> int:
        return len(self.hops)

    @property
    def facet_ids(self) -> tuple[str, ...]:
        return tuple(h.facet_id for h in self.hops)


def _segment_blocked(scene: Scene, start: np.ndarray, end: np.ndarray) -> bool:
    """True if any facet cuts the open segment, OCCLUSION_EPS away from both ends."""
    direction = end - start
    for facet in scene.facets:
        t = ray_plane_parameter(start, direction, facet.plane_point, facet.normal)
        if t is None or not 0.0 < t < 1.0:
            continue
        point = start + t * direction
        if float(np.linalg.norm(point - start)) <= OCCLUSION_EPS:
            continue
        if float(np.linalg.norm(point - end)) <= OCCLUSION_EPS:
            continue
        if point_in_convex_polygon(point, facet.vertices, facet.normal):
            return True
    return False


def _fold_back(
    sequence: tuple[Facet, ...], images: list[np.ndarray], rx: np.ndarray
) -> list[np.ndarray] | None:
    """Reflection points for a facet sequence, or None if the path is invalid."""
    points: list[np.ndarray] = [rx]
    for j in range(len(sequence), 0, -1):
        facet = sequence[j - 1]
        origin = images[j]
        target = points[0]
        direction = target - origin
        t = ray_plane_parameter(origin, direction, facet.plane_point, facet.normal)
        if t is None or not 1e-12 < t < 1.0 - 1e-12:
            return None
        rp = origin + t * direction
        if not point_in_convex_polygon(rp, facet.vertices, facet.normal):
            return None
        points.insert(0, rp)
    return points[:-1]


def trace(
    scene: Scene, tx, rx, max_bounces: int = 2
) -> list[Trajectory]:
    """All specular trajectories between tx and rx with 1..max_bounces hops.

    Output is sorted by (bounce count, total length, facet id sequence) and is
    fully deterministic. Consecutive bounces off the same facet are excluded.

    Raises:
        ValueError: if tx == rx, either endpoint is outside the scene bounds,
            or max_bounces is outside [1, 4].
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if tx.shape != (3,) or rx.shape != (3,):
        raise ValueError("tx and rx must be 3D points")
    if float(np.linalg.norm(tx - rx)) < 1e-12:
        raise ValueError("tx and rx must be distinct")
    if not 1 <= max_bounces <= 4:
        raise ValueError(f"max_bounces must be in [1, 4], got {max_bounces}")
    for label, p in (("tx", tx), ("rx", rx)):
        if not scene.contains(p):
            raise ValueError(f"{label} {p.tolist()} is outside the scene bounds")

    found: list[Trajectory] = []
    for k in range(1, max_bounces + 1):
        for sequence in product(scene.facets, repeat=k):
            if any(
                sequence[i].facet_id == sequence[i + 1].facet_id
                for i in range(k - 1)
            ):
                continue
            images = [tx]
            for facet in sequence:
                images.append(mirror_point(images[-1], facet.plane_point, facet.normal))
            rps = _fold_back(sequence, images, rx)
            if rps is None:
                continue
            path = [tx, *rps, rx]
            legs = [path[i + 1] - path[i] for i in range(len(path) - 1)]
            lengths = [float(np.linalg.norm(leg)) for leg in legs]
            if any(length <= OCCLUSION_EPS for length in lengths):
                continue
            thetas = []
            grazing = False
            for i, facet in enumerate(sequence):
                cos_t = abs(float(unit(legs[i]) @ facet.normal))
                if cos_t < 1e-12:
                    grazing = True
                    break
                thetas.append(math.acos(min(cos_t, 1.0)))
            if grazing:
                continue
            if any(
                _segment_blocked(scene, path[i], path[i + 1])
                for i in range(len(path) - 1)
            ):
                continue
            hops = tuple(
                Hop(point=rp, facet_id=facet.facet_id, theta_i=theta)
                for rp, facet, theta in zip(rps, sequence, thetas)
            )
            found.append(
                Trajectory(
                    tx=tx,
                    rx=rx,
                    hops=hops,
                    segment_lengths=tuple(lengths),
                    total_length=float(sum(lengths)),
                )
            )
    found.sort(key=lambda t: (t.bounces, t.total_length, t.facet_ids))
    return found


def check_settling(
    scene: Scene, settling_by_material: dict[str, float]
) -> list[tuple[str, bool | None]]:
    """Compare each facet's thickness with its material's settling thickness.

    ``settling_by_material`` maps material label to the settling thickness in
    meters at the frequency of interest (see settling.settling_table). Returns
    (facet_id, ok) pairs in scene order; ok is None (indeterminate) for facets
    whose material has no entry.
    """
    report: list[tuple[str, bool | None]] = []
    for facet in scene.facets:
        threshold = settling_by_material.get(facet.material_label)
        if threshold is None:
            report.append((facet.facet_id, None))
        else:
            report.append((facet.facet_id, facet.thickness_m >= threshold))
    return report
