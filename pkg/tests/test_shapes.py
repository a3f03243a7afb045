"""Shape primitives, hull mass properties and mesh loading."""

from __future__ import annotations

import numpy as np
import pytest

from ekfphys.dynamics import Box, ConvexMesh, Plane, Sphere, inertia_from_convex_mesh
from ekfphys.dynamics.shapes import load_mesh_vertices, solid_hull_properties


def unit_cube_vertices(center=(0.0, 0.0, 0.0), half=0.5):
    c = np.asarray(center, dtype=float)
    return c + half * np.array(
        [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float
    )


def fibonacci_sphere(n=800, radius=0.1):
    i = np.arange(n)
    phi = np.arccos(1.0 - 2.0 * (i + 0.5) / n)
    th = np.pi * (1.0 + 5.0**0.5) * i
    return radius * np.stack(
        [np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], axis=1
    )


def test_unit_cube_inertia():
    # Solid cube, side 1, mass 1: I = diag(1/6).
    inertia = inertia_from_convex_mesh(unit_cube_vertices(), 1.0)
    assert np.allclose(inertia, np.eye(3) / 6.0, atol=1e-12)


def test_cube_inertia_translation_invariant():
    # Inertia is about the solid centroid, so a shifted cloud gives the same tensor.
    inertia = inertia_from_convex_mesh(unit_cube_vertices(center=(3.0, -2.0, 7.0)), 2.5)
    assert np.allclose(inertia, 2.5 * np.eye(3) / 6.0, atol=1e-10)


def test_sphere_hull_inertia_close_to_analytic():
    inertia = inertia_from_convex_mesh(fibonacci_sphere(), 1.0)
    target = 0.4 * 1.0 * 0.1**2
    assert np.allclose(np.diag(inertia), target, rtol=0.02)
    off_diag = inertia - np.diag(np.diag(inertia))
    assert np.max(np.abs(off_diag)) < 1e-5


def test_inertia_quadratic_scaling():
    verts = unit_cube_vertices()
    base = inertia_from_convex_mesh(verts, 1.0)
    doubled = inertia_from_convex_mesh(2.0 * verts, 1.0)
    assert np.allclose(doubled, 4.0 * base, atol=1e-10)


def test_inertia_is_spd():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pts = rng.standard_normal((12, 3))
        inertia = inertia_from_convex_mesh(pts, 1.0)
        assert np.allclose(inertia, inertia.T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(inertia) > 0.0)


def test_degenerate_mesh_rejected():
    coplanar = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(ValueError):
        inertia_from_convex_mesh(coplanar, 1.0)
    with pytest.raises(ValueError):
        ConvexMesh(coplanar)


def test_box_matches_mesh_inertia():
    box = Box([0.1, 0.2, 0.3])
    mesh_inertia = inertia_from_convex_mesh(box.vertices, 0.7)
    assert np.allclose(box.inertia(0.7), mesh_inertia, atol=1e-12)


def test_sphere_inertia():
    assert np.allclose(Sphere(0.1).inertia(2.0), np.eye(3) * 0.4 * 2.0 * 0.01, atol=1e-15)


def test_convex_mesh_recentred_and_reduced():
    pts = np.vstack([unit_cube_vertices(center=(5.0, 5.0, 5.0)), [[5.0, 5.0, 5.0]]])
    mesh = ConvexMesh(pts)
    assert mesh.vertices.shape == (8, 3)  # interior point dropped
    assert np.allclose(mesh.vertices.mean(axis=0), 0.0, atol=1e-9)
    assert len(mesh.faces) == 6
    assert np.allclose(mesh.volume, 1.0, atol=1e-9)


def test_convex_mesh_face_normals_outward():
    mesh = ConvexMesh(unit_cube_vertices())
    for ring, normal in zip(mesh.faces, mesh.face_normals):
        face_center = mesh.vertices[list(ring)].mean(axis=0)
        assert normal @ face_center > 0.0


def test_support_functions():
    box = Box([1.0, 2.0, 3.0])
    assert np.array_equal(box.support_local(np.array([1.0, -1.0, 0.5])), [1.0, -2.0, 3.0])
    sph = Sphere(2.0)
    assert np.allclose(sph.support_local(np.array([0.0, 3.0, 4.0])), [0.0, 1.2, 1.6], atol=1e-12)
    mesh = ConvexMesh(unit_cube_vertices())
    sup = mesh.support_local(np.array([1.0, 1.0, 1.0]))
    assert np.allclose(sup, [0.5, 0.5, 0.5], atol=1e-12)


def test_plane_signed_distance():
    plane = Plane([0.0, 0.0, 2.0], offset=1.0)  # normal normalized on entry
    assert np.allclose(plane.normal, [0.0, 0.0, 1.0])
    d = plane.signed_distance(np.array([[0.0, 0.0, 3.0], [1.0, 1.0, 0.0]]))
    assert np.allclose(d, [2.0, -1.0])


def test_load_off_and_obj(tmp_path):
    cube = unit_cube_vertices()
    off = tmp_path / "cube.off"
    lines = ["OFF", f"{len(cube)} 0 0"] + [" ".join(str(x) for x in v) for v in cube]
    off.write_text("\n".join(lines))
    assert np.allclose(load_mesh_vertices(str(off)), cube)

    obj = tmp_path / "cube.obj"
    lines = [f"v {v[0]} {v[1]} {v[2]}" for v in cube] + ["f 1 2 3"]
    obj.write_text("\n".join(lines))
    assert np.allclose(load_mesh_vertices(str(obj)), cube)

    mesh = ConvexMesh(load_mesh_vertices(str(off)))
    assert np.allclose(mesh.inertia(1.0), np.eye(3) / 6.0, atol=1e-12)


def test_hull_volume_centroid():
    volume, centroid, _ = solid_hull_properties(unit_cube_vertices(center=(1.0, 0.0, 0.0)))
    assert np.isclose(volume, 1.0, atol=1e-12)
    assert np.allclose(centroid, [1.0, 0.0, 0.0], atol=1e-12)
