"""Collision shapes and mass properties.

Bodies are convex: boxes, spheres, or convex meshes. Boxes and spheres are
convenience shapes; boxes share the vertex/face machinery of convex
meshes, spheres take analytic paths in the collision routines. A support
function per shape drives the general convex-convex queries.

The ground is an infinite static plane, not a body.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

__all__ = [
    "Plane",
    "Sphere",
    "Box",
    "ConvexMesh",
    "inertia_from_convex_mesh",
    "solid_hull_properties",
    "load_mesh_vertices",
]


@dataclass(frozen=True)
class Plane:
    """Infinite plane {x : normal . x = offset}; bodies live on the +normal side."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValueError("plane normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal - self.offset


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("sphere radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def support_local(self, direction: np.ndarray) -> np.ndarray:
        n = np.linalg.norm(direction)
        if n == 0.0:
            return np.array([self.radius, 0.0, 0.0])
        return (self.radius / n) * direction

    def inertia(self, mass: float) -> np.ndarray:
        return np.eye(3) * (0.4 * mass * self.radius**2)


def _box_vertices(half: np.ndarray) -> np.ndarray:
    signs = np.array(
        [
            [-1, -1, -1],
            [+1, -1, -1],
            [+1, +1, -1],
            [-1, +1, -1],
            [-1, -1, +1],
            [+1, -1, +1],
            [+1, +1, +1],
            [-1, +1, +1],
        ],
        dtype=float,
    )
    return signs * half


# Vertex rings of the 6 box faces, wound counter-clockwise seen from outside.
_BOX_FACES = (
    (0, 3, 2, 1),  # -z
    (4, 5, 6, 7),  # +z
    (0, 1, 5, 4),  # -y
    (2, 3, 7, 6),  # +y
    (0, 4, 7, 3),  # -x
    (1, 2, 6, 5),  # +x
)


@dataclass(frozen=True)
class Box:
    half_extents: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.half_extents, dtype=float)
        if h.shape != (3,) or np.any(h <= 0.0):
            raise ValueError("box half extents must be three positive numbers")
        object.__setattr__(self, "half_extents", h)

    @property
    def vertices(self) -> np.ndarray:
        return _box_vertices(self.half_extents)

    @property
    def faces(self) -> tuple[tuple[int, ...], ...]:
        return _BOX_FACES

    def support_local(self, direction: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(direction) >= 0.0, self.half_extents, -self.half_extents)

    def inertia(self, mass: float) -> np.ndarray:
        hx, hy, hz = self.half_extents
        return (
            np.diag([hy**2 + hz**2, hx**2 + hz**2, hx**2 + hy**2]) * (mass / 3.0)
        )


class ConvexMesh:
    """Convex hull of a vertex cloud, re-expressed about its solid centroid.

    Vertices that are not hull vertices are dropped; faces are qhull facets
    merged into planar polygons (vertex rings ordered counter-clockwise
    around the outward normal) for use in contact clipping.
    """

    __slots__ = ("vertices", "faces", "face_normals", "_volume", "_unit_inertia")

    def __init__(self, vertices, recenter: bool = True):
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 4:
            raise ValueError("a convex mesh needs at least 4 points in 3-D")
        try:
            hull = ConvexHull(pts)
        except QhullError as exc:
            raise ValueError(f"degenerate vertex cloud (coplanar or duplicate): {exc}") from exc
        volume, centroid, unit_inertia = solid_hull_properties(pts, hull)
        pts = pts[np.sort(np.unique(hull.vertices))]
        if recenter:
            pts = pts - centroid
        hull = ConvexHull(pts)
        self.vertices = np.ascontiguousarray(hull.points)
        self.faces = _merged_faces(hull)
        self.face_normals = np.array(
            [_face_normal(self.vertices, ring) for ring in self.faces]
        )
        self._volume = volume
        self._unit_inertia = unit_inertia

    @property
    def volume(self) -> float:
        return self._volume

    def support_local(self, direction: np.ndarray) -> np.ndarray:
        return self.vertices[np.argmax(self.vertices @ np.asarray(direction, dtype=float))]

    def inertia(self, mass: float) -> np.ndarray:
        return mass * self._unit_inertia


def solid_hull_properties(vertices: np.ndarray, hull: ConvexHull | None = None):
    """Volume, centroid and mass-normalized inertia of a uniform solid hull.

    Integrates x x^T over the hull by fanning signed tetrahedra from the
    origin over the (outward-oriented) triangular facets. Returns
    (volume, centroid, inertia/mass about the centroid).
    """
    if hull is None:
        try:
            hull = ConvexHull(np.asarray(vertices, dtype=float))
        except QhullError as exc:
            raise ValueError(f"degenerate vertex cloud (coplanar or duplicate): {exc}") from exc
    pts = hull.points
    volume = 0.0
    first_moment = np.zeros(3)
    second = np.zeros((3, 3))
    for simplex, eq in zip(hull.simplices, hull.equations):
        a, b, c = pts[simplex]
        # Orient the triangle with the outward facet normal.
        if np.cross(b - a, c - a) @ eq[:3] < 0.0:
            b, c = c, b
        vol6 = np.linalg.det(np.array([a, b, c]))
        v = vol6 / 6.0
        volume += v
        first_moment += v * (a + b + c) / 4.0
        stack = np.array([a, b, c])
        ssum = stack.sum(axis=0)
        second += (v / 20.0) * (stack.T @ stack + np.outer(ssum, ssum))
    if volume <= 0.0:
        raise ValueError("hull has non-positive volume")
    centroid = first_moment / volume
    second_c = second - volume * np.outer(centroid, centroid)
    covariance = second_c / volume  # per unit mass
    unit_inertia = np.trace(covariance) * np.eye(3) - covariance
    return volume, centroid, unit_inertia


def inertia_from_convex_mesh(vertices, mass: float) -> np.ndarray:
    """Inertia tensor (about the solid centroid) of the uniform-density hull."""
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    _, _, unit_inertia = solid_hull_properties(np.asarray(vertices, dtype=float))
    return mass * unit_inertia


def _face_normal(pts: np.ndarray, ring) -> np.ndarray:
    a, b, c = pts[ring[0]], pts[ring[1]], pts[ring[2]]
    n = np.cross(b - a, c - a)
    return n / np.linalg.norm(n)


def _merged_faces(hull: ConvexHull) -> tuple[tuple[int, ...], ...]:
    """Group coplanar qhull facets into polygon rings, CCW from outside."""
    pts = hull.points
    groups: dict[tuple, set] = {}
    normals: dict[tuple, np.ndarray] = {}
    for simplex, eq in zip(hull.simplices, hull.equations):
        key = tuple(np.round(eq, 9))
        groups.setdefault(key, set()).update(simplex.tolist())
        normals[key] = eq[:3]
    faces = []
    for key in sorted(groups):
        idx = np.array(sorted(groups[key]))
        n = normals[key]
        n = n / np.linalg.norm(n)
        center = pts[idx].mean(axis=0)
        # Order around the face normal.
        u = pts[idx[0]] - center
        u = u - (u @ n) * n
        u /= np.linalg.norm(u)
        w = np.cross(n, u)
        ang = np.arctan2((pts[idx] - center) @ w, (pts[idx] - center) @ u)
        faces.append(tuple(idx[np.argsort(ang)].tolist()))
    return tuple(faces)


def load_mesh_vertices(path: str) -> np.ndarray:
    """Read vertex positions from an ASCII OFF or OBJ file.

    Faces are ignored; the hull is recomputed by ConvexMesh, so any vertex
    soup describing a convex solid works.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty mesh file")
    verts: list[list[float]] = []
    if lines[0].upper().startswith("OFF"):
        header = lines[0][3:].split() or lines[1].split()
        start = 1 if lines[0][3:].split() else 2
        n_verts = int(header[0])
        for ln in lines[start : start + n_verts]:
            verts.append([float(x) for x in ln.split()[:3]])
    else:
        for ln in lines:
            parts = ln.split()
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
    if len(verts) < 4:
        raise ValueError(f"{path}: fewer than 4 vertices")
    return np.asarray(verts, dtype=float)
