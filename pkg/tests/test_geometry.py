import numpy as np
import pytest

from fsiwave.errors import FormatError, GeometryViolation
from fsiwave.geometry import (FLUID, HEMISPHERE, INTERFACE, SOLID, SURFACE, Ellipsoid, GeometrySpec,
                              MaterialParams, SurfaceProfile, Violation, build_mesh, read_mesh,
                              surface_height, validate_geometry, write_mesh)

from conftest import BODY_SPEC

# tet count of the flat R=1, h=0.25 mesh, recorded from the mesher at seed 0
FLAT_TETS_H025 = 924


def test_bump_support_and_peak():
    f = SurfaceProfile.bump(0.1, 0.5)
    assert surface_height(f, 1.0, 0.0) == 0.0
    assert surface_height(f, 0.0, 0.0) == pytest.approx(0.1, abs=1e-15)
    r = 0.3
    assert surface_height(f, r, 0.0) == pytest.approx(0.1 * np.exp(1 - 1 / (1 - (r / 0.5) ** 2)), rel=1e-14)


def test_flat_profile_is_zero(rng):
    x = rng.uniform(-2, 2, (2, 50))
    assert np.all(surface_height(SurfaceProfile.flat(), *x) == 0.0)


def test_bump_is_c2_across_support_edge():
    f = SurfaceProfile.bump(0.1, 0.5)
    for h in (1e-3, 5e-4):
        r = 0.5 + np.array([-2 * h, -h, 0.0, h, 2 * h])
        v = f(r, 0 * r)
        d2 = (v[:-2] - 2 * v[1:-1] + v[2:]) / h**2
        assert np.max(np.abs(d2)) < 1e-6


def test_spline_profile_vanishes_outside_support():
    x = np.linspace(-0.6, 0.6, 13)
    H = 0.05 * np.exp(-10 * (x[:, None] ** 2 + x[None, :] ** 2))
    f = SurfaceProfile.from_samples(x, x, H, r_supp=0.5)
    assert f(0.0, 0.0) == pytest.approx(0.05, rel=1e-2)
    assert f(0.5, 0.0) == 0.0 and f(0.3, 0.45) == 0.0


def test_material_violations_name_the_invariant():
    assert MaterialParams().violations() == []
    assert MaterialParams(c=-1.0).violations() == ["MaterialParams: c > 0 violated"]
    assert "3*lambda + 2*mu >= 0" in MaterialParams(lam=-2.0, mu=1.0).violations()[0]


def test_validate_geometry_cases():
    assert validate_geometry(BODY_SPEC) == []
    touching = GeometrySpec(R=1.0, body=Ellipsoid.sphere((0, 0, 0.1), 0.1))
    assert Violation.BodyBelowSurface in validate_geometry(touching)
    wide = GeometrySpec(R=1.0, profile=SurfaceProfile.bump(0.1, 1.2))
    assert validate_geometry(wide) == [Violation.SupportOutsideHalfBall]


def test_build_mesh_rejects_large_body():
    with pytest.raises(GeometryViolation):
        build_mesh(GeometrySpec(R=1.0, body=Ellipsoid.sphere((0, 0, 0.5), 1.5)), 0.3)


def test_flat_mesh_regression_and_tags(flat_mesh):
    assert len(flat_mesh.tets) == FLAT_TETS_H025
    assert flat_mesh.tags_present == {SURFACE, HEMISPHERE}
    assert flat_mesh.max_diameter() <= 2 * 0.25
    assert np.all(flat_mesh.signed_volumes() > 0)
    # plane facets lie on x3 = 0 exactly
    assert np.max(np.abs(flat_mesh.vertices[flat_mesh.tag_vertices(SURFACE), 2])) < 1e-14


def test_flat_mesh_volume_is_half_ball_up_to_facets():
    mesh = build_mesh(GeometrySpec(R=1.0), 0.1)
    vol = mesh.signed_volumes().sum()
    assert 0.97 * 2 * np.pi / 3 < vol <= 2 * np.pi / 3
    hemi = mesh.facets_with(HEMISPHERE)
    cent = mesh.vertices[hemi].mean(axis=1)
    dots = np.einsum("ij,ij->i", mesh.normals[mesh.facet_tags == HEMISPHERE],
                     cent / np.linalg.norm(cent, axis=1)[:, None])
    assert dots.min() > 0.99


def test_body_mesh_structure(body_mesh):
    m = body_mesh
    assert m.tags_present == {INTERFACE, SURFACE, HEMISPHERE}
    assert set(np.unique(m.regions)) == {FLUID, SOLID}
    assert np.all(m.signed_volumes() > 0)
    # hemisphere vertices on the sphere, surface vertices on the profile (within h^2)
    hv = m.vertices[m.tag_vertices(HEMISPHERE)]
    assert np.max(np.abs(np.linalg.norm(hv, axis=1) - 1.0)) < 1e-12
    sv = m.vertices[m.tag_vertices(SURFACE)]
    assert np.max(np.abs(sv[:, 2] - BODY_SPEC.profile(sv[:, 0], sv[:, 1]))) < 0.2**2
    gv = m.vertices[m.tag_vertices(INTERFACE)]
    assert np.max(np.abs(BODY_SPEC.body.level(gv) - 1.0)) < 1e-8


def test_interface_facets_pair_one_fluid_one_solid(body_mesh):
    m = body_mesh
    owners = {}
    for t, r in zip(m.tets, m.regions):
        for face in (t[[0, 1, 2]], t[[0, 1, 3]], t[[0, 2, 3]], t[[1, 2, 3]]):
            owners.setdefault(tuple(sorted(face)), []).append(int(r))
    for f in m.facets_with(INTERFACE):
        assert sorted(owners[tuple(sorted(f))]) == [FLUID, SOLID]


def test_interface_normals_point_out_of_body(body_mesh):
    m = body_mesh
    sel = m.facet_tags == INTERFACE
    cent = m.vertices[m.facets[sel]].mean(axis=1)
    outward = (cent - np.array(BODY_SPEC.body.center)) / np.array(BODY_SPEC.body.semi_axes) ** 2
    assert np.all(np.einsum("ij,ij->i", m.normals[sel], outward) > 0)


def test_mesh_round_trip(tmp_path, body_mesh):
    p = tmp_path / "m.fsimesh"
    write_mesh(body_mesh, p)
    back = read_mesh(p)
    for name in ("vertices", "tets", "regions", "facets", "facet_tags"):
        assert np.array_equal(getattr(back, name), getattr(body_mesh, name))
    p.write_text("FSIMESH 2\n")
    with pytest.raises(FormatError):
        read_mesh(p)


def test_mesh_is_deterministic():
    a = build_mesh(GeometrySpec(R=1.0), 0.3, seed=3)
    b = build_mesh(GeometrySpec(R=1.0), 0.3, seed=3)
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.tets, b.tets)
