"""Contact generation between convex bodies and the ground plane.

Conventions, shared with the contact solver:

- ``normal`` is the world-frame direction in which ``body_a`` separates
  from ``body_b`` (for plane contacts it is the plane normal).
- ``depth`` is positive when penetrating; contacts are also emitted for
  gaps smaller than ``margin`` with negative depth, so the solver can stop
  bodies just before impact.
- friction directions come in +/- pairs spanning the contact plane; the
  first pair is aligned with the slip velocity when the contact is
  sliding, which makes the pyramid exact along the slide direction.

Convex-convex queries use GJK for distance, EPA for penetration, and
reference/incident face clipping for up to four manifold points. All
outputs are deterministic functions of the inputs: bodies are visited in
index order, vertices in shape order, clipped points in winding order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .shapes import Box, ConvexMesh, Plane, Sphere

__all__ = ["Contact", "generate_contacts", "N_FRICTION_DIRS"]

N_FRICTION_DIRS = 4

_SLIP_EPS = 1e-6
_GJK_MAX_ITER = 64
_EPA_MAX_ITER = 128
_EPA_TOL = 1e-10


@dataclass(frozen=True)
class Contact:
    """A single contact point between body_a and body_b (-1 = ground plane)."""

    body_a: int
    body_b: int
    point: np.ndarray
    normal: np.ndarray
    depth: float
    dirs: np.ndarray  # (N_FRICTION_DIRS, 3) tangent directions, +/- pairs


# ---------------------------------------------------------------------------
# support maps


def _support_world(shape, R: np.ndarray, p: np.ndarray, d: np.ndarray) -> np.ndarray:
    local = shape.support_local(R.T @ d)
    return p + R @ local


def _vertices_world(shape, R: np.ndarray, p: np.ndarray) -> np.ndarray:
    return shape.vertices @ R.T + p


def _world_faces(shape, R: np.ndarray, p: np.ndarray):
    """(ring points, outward normal) per face, in shape face order."""
    verts = _vertices_world(shape, R, p)
    out = []
    for ring in shape.faces:
        pts = verts[list(ring)]
        a, b, c = pts[0], pts[1], pts[2]
        n = np.cross(b - a, c - a)
        out.append((pts, n / np.linalg.norm(n)))
    return out


# ---------------------------------------------------------------------------
# GJK distance / EPA penetration on the Minkowski difference A - B


def _closest_on_segment(a, b):
    ab = b - a
    denom = ab @ ab
    if denom < 1e-300:
        return a, np.array([1.0, 0.0])
    t = np.clip(-(a @ ab) / denom, 0.0, 1.0)
    return a + t * ab, np.array([1.0 - t, t])


def _closest_on_triangle(a, b, c):
    # Ericson-style closest point to the origin, with barycentric weights.
    ab, ac = b - a, c - a
    d1, d2 = -(ab @ a), -(ac @ a)
    if d1 <= 0.0 and d2 <= 0.0:
        return a, np.array([1.0, 0.0, 0.0])
    d3, d4 = -(ab @ b), -(ac @ b)
    if d3 >= 0.0 and d4 <= d3:
        return b, np.array([0.0, 1.0, 0.0])
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        return a + t * ab, np.array([1.0 - t, t, 0.0])
    d5, d6 = -(ab @ c), -(ac @ c)
    if d6 >= 0.0 and d5 <= d6:
        return c, np.array([0.0, 0.0, 1.0])
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        return a + t * ac, np.array([1.0 - t, 0.0, t])
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + t * (c - b), np.array([0.0, 1.0 - t, t])
    denom = 1.0 / (va + vb + vc)
    v, w = vb * denom, vc * denom
    return a + ab * v + ac * w, np.array([1.0 - v - w, v, w])


def _closest_on_simplex(pts: np.ndarray):
    """Closest point to the origin on a 1..4 point simplex.

    Returns (closest, lambdas, keep-indices). For a tetrahedron containing
    the origin, returns (zero vector, None, all indices).
    """
    k = len(pts)
    if k == 1:
        return pts[0], np.array([1.0]), [0]
    if k == 2:
        v, lam = _closest_on_segment(pts[0], pts[1])
        keep = [i for i in range(2) if lam[i] > 1e-14]
        return v, lam[lam > 1e-14], keep
    if k == 3:
        v, lam = _closest_on_triangle(pts[0], pts[1], pts[2])
        keep = [i for i in range(3) if lam[i] > 1e-14]
        return v, lam[lam > 1e-14], keep
    # tetrahedron: test containment, else best of the four faces
    a, b, c, d = pts
    faces = ((0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 3, 1), (1, 2, 3, 0))
    best = None
    inside = True
    for i, j, l, opp in faces:
        n = np.cross(pts[j] - pts[i], pts[l] - pts[i])
        side_origin = -(n @ pts[i])
        side_opp = n @ (pts[opp] - pts[i])
        if side_origin * side_opp > 0.0:
            continue  # origin on the inner side of this face
        inside = False
        v, lam = _closest_on_triangle(pts[i], pts[j], pts[l])
        dist = v @ v
        if best is None or dist < best[0]:
            keep = [idx for idx, w in zip((i, j, l), lam) if w > 1e-14]
            best = (dist, v, lam[lam > 1e-14], keep)
    if inside:
        return np.zeros(3), None, [0, 1, 2, 3]
    return best[1], best[2], best[3]


class _SupportPair:
    __slots__ = ("sa", "sb")

    def __init__(self, shape_a, Ra, pa, shape_b, Rb, pb):
        self.sa = lambda d: _support_world(shape_a, Ra, pa, d)
        self.sb = lambda d: _support_world(shape_b, Rb, pb, d)

    def support(self, d: np.ndarray):
        a = self.sa(d)
        b = self.sb(-d)
        return a - b, a, b


def _gjk(pair: _SupportPair, d0: np.ndarray):
    """GJK distance query.

    Returns (overlap, dist, point_a, point_b, simplex) where simplex is the
    list of (minkowski, support_a, support_b) triples at termination.
    """
    d = d0 if np.linalg.norm(d0) > 1e-12 else np.array([1.0, 0.0, 0.0])
    w, sa, sb = pair.support(d)
    simplex = [(w, sa, sb)]
    v = w
    for _ in range(_GJK_MAX_ITER):
        vv = v @ v
        if vv < 1e-24:
            return True, 0.0, None, None, simplex
        w, sa, sb = pair.support(-v)
        # no progress toward the origin: v is the closest point
        if vv - v @ w <= 1e-12 * max(1.0, vv):
            break
        simplex.append((w, sa, sb))
        pts = np.array([s[0] for s in simplex])
        v, lam, keep = _closest_on_simplex(pts)
        simplex = [simplex[i] for i in keep]
        if lam is None:
            return True, 0.0, None, None, simplex
    pts = np.array([s[0] for s in simplex])
    v, lam, keep = _closest_on_simplex(pts)
    if lam is None:
        return True, 0.0, None, None, simplex
    simplex = [simplex[i] for i in keep]
    pa = sum(l * s[1] for l, s in zip(lam, simplex))
    pb = sum(l * s[2] for l, s in zip(lam, simplex))
    return False, float(np.linalg.norm(v)), pa, pb, simplex


def _expands_rank(simplex, w: np.ndarray) -> bool:
    """True when adding w strictly increases the simplex's affine span."""
    k = len(simplex)
    s0 = simplex[0][0]
    if k == 1:
        return np.linalg.norm(w - s0) > 1e-12
    if k == 2:
        c = np.cross(simplex[1][0] - s0, w - s0)
        return bool(c @ c > 1e-20)
    n = np.cross(simplex[1][0] - s0, simplex[2][0] - s0)
    return abs(n @ (w - s0)) > 1e-12 * max(1.0, float(np.linalg.norm(n)))


_UNIT_AXES = [
    np.array([1.0, 0.0, 0.0]),
    np.array([-1.0, 0.0, 0.0]),
    np.array([0.0, 1.0, 0.0]),
    np.array([0.0, -1.0, 0.0]),
    np.array([0.0, 0.0, 1.0]),
    np.array([0.0, 0.0, -1.0]),
]


def _complete_tetrahedron(pair: _SupportPair, simplex):
    """Grow a degenerate GJK termination simplex to a full-rank tetrahedron."""
    while len(simplex) < 4:
        k = len(simplex)
        if k == 2:
            e = simplex[1][0] - simplex[0][0]
            n1 = np.cross(e, np.array([1.0, 0.0, 0.0]))
            if n1 @ n1 < 1e-20:
                n1 = np.cross(e, np.array([0.0, 1.0, 0.0]))
            n2 = np.cross(e, n1)
            cands = [n1, -n1, n2, -n2] + _UNIT_AXES
        elif k == 3:
            n = np.cross(simplex[1][0] - simplex[0][0], simplex[2][0] - simplex[0][0])
            cands = [n, -n] + _UNIT_AXES
        else:
            cands = _UNIT_AXES
        for d in cands:
            w, sa, sb = pair.support(d)
            if _expands_rank(simplex, w):
                simplex.append((w, sa, sb))
                break
        else:
            return None
    return simplex


def _epa(pair: _SupportPair, simplex):
    """Penetration depth and direction for overlapping shapes.

    Returns (normal pointing from B toward A i.e. the separation direction
    of A, depth, witness_a, witness_b) or None when the polytope degenerates.
    """
    simplex = list(simplex)
    if len(simplex) < 4:
        simplex = _complete_tetrahedron(pair, simplex)
        if simplex is None:
            return None
    verts = [s[0] for s in simplex]
    wita = [s[1] for s in simplex]
    witb = [s[2] for s in simplex]

    # orient the initial tetra faces outward (away from the interior point)
    interior = np.mean(verts, axis=0)
    faces: list[tuple[int, int, int]] = []
    for tri in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        i, j, k = tri
        n = np.cross(verts[j] - verts[i], verts[k] - verts[i])
        if n @ (interior - verts[i]) > 0.0:
            tri = (i, k, j)
        faces.append(tri)

    def face_data(tri):
        i, j, k = tri
        n = np.cross(verts[j] - verts[i], verts[k] - verts[i])
        nn = np.linalg.norm(n)
        if nn < 1e-300:
            return None
        n = n / nn
        return n, float(n @ verts[i])

    for _ in range(_EPA_MAX_ITER):
        best = None
        for tri in faces:
            fd = face_data(tri)
            if fd is None:
                continue
            n, dist = fd
            if best is None or dist < best[0]:
                best = (dist, n, tri)
        if best is None:
            return None
        dist, n, tri = best
        w, sa, sb = pair.support(n)
        growth = n @ w - dist
        if growth < _EPA_TOL:
            # project the origin onto the face for witness points
            i, j, k = tri
            _, lam = _closest_on_triangle(verts[i], verts[j], verts[k])
            pa = lam[0] * wita[i] + lam[1] * wita[j] + lam[2] * wita[k]
            pb = lam[0] * witb[i] + lam[1] * witb[j] + lam[2] * witb[k]
            return -n, max(dist, 0.0), pa, pb
        verts.append(w)
        wita.append(sa)
        witb.append(sb)
        new_idx = len(verts) - 1
        visible = []
        hidden = []
        for t in faces:
            fd = face_data(t)
            if fd is None:
                visible.append(t)
                continue
            fn, fdist = fd
            (visible if fn @ w > fdist + 1e-15 else hidden).append(t)
        if not visible:
            return -n, max(dist, 0.0), None, None
        edge_count: dict[tuple[int, int], int] = {}
        for t in visible:
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = (min(e), max(e))
                edge_count[key] = edge_count.get(key, 0) + 1
        horizon = [e for t in visible for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))
                   if edge_count[(min(e), max(e))] == 1]
        faces = hidden + [(e[0], e[1], new_idx) for e in horizon]
    return None


# ---------------------------------------------------------------------------
# manifold clipping


def _clip_halfspace(poly: list[np.ndarray], anchor: np.ndarray, inward: np.ndarray):
    out: list[np.ndarray] = []
    n = len(poly)
    for i in range(n):
        cur, nxt = poly[i], poly[(i + 1) % n]
        dc = inward @ (cur - anchor)
        dn = inward @ (nxt - anchor)
        if dc >= 0.0:
            out.append(cur)
        if (dc > 0.0) != (dn > 0.0) and abs(dc - dn) > 1e-300:
            t = dc / (dc - dn)
            out.append(cur + t * (nxt - cur))
    return out


def _reduce_manifold(points: np.ndarray, depths: np.ndarray, normal: np.ndarray):
    if len(points) <= 4:
        return points, depths
    center = points.mean(axis=0)
    u = points[int(np.argmax(depths))] - center
    u = u - (u @ normal) * normal
    if u @ u < 1e-20:
        u = np.array([1.0, 0.0, 0.0]) - normal[0] * normal
    u = u / np.linalg.norm(u)
    w = np.cross(normal, u)
    rel = points - center
    ang = np.arctan2(rel @ w, rel @ u)
    order = np.argsort(ang, kind="stable")
    pick = sorted({order[int(round(k * len(points) / 4.0)) % len(points)] for k in range(4)})
    while len(pick) < 4:
        for idx in order:
            if idx not in pick:
                pick.append(int(idx))
                break
    pick = sorted(pick)[:4]
    return points[pick], depths[pick]


def _face_manifold(faces_a, faces_b, normal: np.ndarray, margin: float):
    """Clip the incident face against the reference face side planes.

    ``normal`` is the separation direction of A. Returns (points, depths)
    with points on the incident body's face, or None when clipping fails.
    """
    align_a, face_a = max(
        ((-(normal) @ fn, (pts, fn)) for pts, fn in faces_a), key=lambda t: t[0]
    )
    align_b, face_b = max(
        ((normal @ fn, (pts, fn)) for pts, fn in faces_b), key=lambda t: t[0]
    )
    if align_a >= align_b:
        ref_pts, ref_n = face_a
        inc_pts, _ = face_b
    else:
        ref_pts, ref_n = face_b
        inc_pts, _ = face_a
    poly = [p for p in inc_pts]
    nref = len(ref_pts)
    for i in range(nref):
        e0, e1 = ref_pts[i], ref_pts[(i + 1) % nref]
        inward = np.cross(ref_n, e1 - e0)
        nn = np.linalg.norm(inward)
        if nn < 1e-300:
            continue
        poly = _clip_halfspace(poly, e0, inward / nn)
        if not poly:
            return None
    pts = np.array(poly)
    sep = (pts - ref_pts[0]) @ ref_n
    keep = sep < margin
    if not np.any(keep):
        return None
    return _reduce_manifold(pts[keep], -sep[keep], normal)


# ---------------------------------------------------------------------------
# per-pair contact routines


def _friction_dirs(normal: np.ndarray, slip: np.ndarray) -> np.ndarray:
    t = slip - (slip @ normal) * normal
    norm = np.linalg.norm(t)
    if norm > _SLIP_EPS:
        t1 = t / norm
    else:
        k = int(np.argmin(np.abs(normal)))
        e = np.zeros(3)
        e[k] = 1.0
        t1 = e - normal[k] * normal
        t1 = t1 / np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return np.array([t1, t2, -t1, -t2])


def _plane_contacts(idx, body, plane: Plane, margin: float):
    shape = body.shape
    n = plane.normal
    found = []
    if isinstance(shape, Sphere):
        center = body.pose.p
        sd = float(n @ center - plane.offset) - shape.radius
        if sd < margin:
            found.append((center - n * shape.radius, -sd))
    else:
        verts = _vertices_world(shape, body.pose.R.matrix, body.pose.p)
        sd = plane.signed_distance(verts)
        for vi in np.nonzero(sd < margin)[0]:
            found.append((verts[vi], -float(sd[vi])))
    return [(idx, -1, pt, n, depth) for pt, depth in found]


def _pair_contacts(ia, ib, body_a, body_b, margin: float):
    sa, sb = body_a.shape, body_b.shape
    pa, pb = body_a.pose.p, body_b.pose.p
    if isinstance(sa, Sphere) and isinstance(sb, Sphere):
        diff = pa - pb
        dist = np.linalg.norm(diff)
        if dist < 1e-12:
            return []
        n = diff / dist
        sep = dist - sa.radius - sb.radius
        if sep >= margin:
            return []
        return [(ia, ib, pa - n * sa.radius, n, -sep)]

    pair = _SupportPair(sa, body_a.pose.R.matrix, pa, sb, body_b.pose.R.matrix, pb)
    overlap, dist, wa, wb, simplex = _gjk(pair, pa - pb)
    if not overlap and dist >= margin:
        return []
    if overlap or dist < 1e-12:
        res = _epa(pair, simplex)
        if res is None:
            return []
        normal, depth, wa, wb = res
    else:
        normal = (wa - wb) / dist
        depth = -dist

    spherical = isinstance(sa, Sphere) or isinstance(sb, Sphere)
    if not spherical:
        faces_a = _world_faces(sa, body_a.pose.R.matrix, pa)
        faces_b = _world_faces(sb, body_b.pose.R.matrix, pb)
        mf = _face_manifold(faces_a, faces_b, normal, margin)
        if mf is not None:
            pts, depths = mf
            return [(ia, ib, pts[i], normal, float(depths[i])) for i in range(len(pts))]
    if wa is None or wb is None:
        return []
    if isinstance(sa, Sphere):
        point = pa - normal * sa.radius
    elif isinstance(sb, Sphere):
        point = pb + normal * sb.radius
    else:
        point = 0.5 * (wa + wb)
    return [(ia, ib, point, normal, depth)]


def generate_contacts(bodies, planes, margin: float = 1e-3) -> list[Contact]:
    """All contacts closer than ``margin``, in deterministic order.

    Bodies are visited by index against each plane (plane order, then
    vertex order), then body pairs (i, j) with i < j. Friction directions
    are slip-aligned using the bodies' current twists.
    """
    raw: list[tuple] = []
    for i, body in enumerate(bodies):
        for plane in planes:
            raw.extend(_plane_contacts(i, body, plane, margin))
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            raw.extend(_pair_contacts(i, j, bodies[i], bodies[j], margin))

    contacts = []
    for ia, ib, point, normal, depth in raw:
        ba = bodies[ia]
        slip = ba.twist.v + np.cross(ba.twist.omega, point - ba.pose.p)
        if ib >= 0:
            bb = bodies[ib]
            slip = slip - bb.twist.v - np.cross(bb.twist.omega, point - bb.pose.p)
        contacts.append(
            Contact(
                body_a=ia,
                body_b=ib,
                point=np.asarray(point, dtype=float),
                normal=np.asarray(normal, dtype=float),
                depth=float(depth),
                dirs=_friction_dirs(np.asarray(normal, dtype=float), slip),
            )
        )
    return contacts
