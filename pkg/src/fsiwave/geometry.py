"""Rough surface, elastic body, half-ball truncation and tetrahedral meshing.

The mesher works in a flat reference configuration: points are laid out on
concentric hemispherical shells (plus the ellipsoidal body layers), triangulated
with Delaunay, and the bottom layer is then pushed onto the rough surface by a
vertical blend that vanishes above height ``H``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.spatial import Delaunay

from .errors import FormatError, GeometryViolation

FLUID, SOLID = 0, 1
# boundary facet tags: Gamma (fluid/solid interface), Gamma_0 (rough surface),
# Gamma_R^+ (truncating hemisphere)
INTERFACE, SURFACE, HEMISPHERE = 1, 2, 3
TAG_NAMES = {INTERFACE: "Gamma", SURFACE: "Gamma0", HEMISPHERE: "GammaR+"}


# --------------------------------------------------------------------------
# surface profiles
# --------------------------------------------------------------------------

def _taper(r, r_in, r_out):
    """C-infinity step: 1 for r <= r_in, 0 for r >= r_out."""
    t = np.clip((np.asarray(r, float) - r_in) / (r_out - r_in), 0.0, 1.0)

    def psi(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    a, b = psi(1.0 - t), psi(t)
    return a / (a + b)


@dataclass(frozen=True)
class SurfaceProfile:
    """Height function of the locally rough surface ``x3 = f(x1, x2)``.

    ``func`` must be vectorised and vanish identically for
    ``x1**2 + x2**2 >= r_supp**2``; ``smoothness`` is the declared C^k class.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    r_supp: float
    smoothness: int = 2
    name: str = "custom"

    def __post_init__(self):
        if self.smoothness < 2:
            raise ValueError("surface profile must be at least C^2")
        if self.r_supp < 0:
            raise ValueError("support radius must be non-negative")

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        out = np.asarray(self.func(x1, x2), float)
        out = np.where(x1 * x1 + x2 * x2 >= self.r_supp**2, 0.0, out)
        return out if out.ndim else float(out)

    @classmethod
    def flat(cls) -> "SurfaceProfile":
        return cls(lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape), 0.0, 99, "flat")

    @classmethod
    def bump(cls, amplitude: float, r_supp: float) -> "SurfaceProfile":
        """Scaled mollifier ``b * exp(1 - 1/(1 - (r/r_supp)^2))``; C-infinity."""

        def f(x1, x2):
            q = (x1 * x1 + x2 * x2) / r_supp**2
            out = np.zeros(np.broadcast(x1, x2).shape)
            inside = q < 1.0
            out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - q[inside]))
            return out

        return cls(f, float(r_supp), 99, "bump")

    @classmethod
    def from_samples(cls, x, y, heights, r_supp: float, taper_start: float = 0.8) -> "SurfaceProfile":
        """Bicubic (C^2) spline through gridded samples, tapered to zero at ``r_supp``."""
        spline = RectBivariateSpline(np.asarray(x, float), np.asarray(y, float),
                                     np.asarray(heights, float), kx=3, ky=3)

        def f(x1, x2):
            x1b, x2b = np.broadcast_arrays(x1, x2)
            vals = spline.ev(x1b.ravel(), x2b.ravel()).reshape(x1b.shape)
            return vals * _taper(np.hypot(x1b, x2b), taper_start * r_supp, r_supp)

        return cls(f, float(r_supp), 2, "spline")


def surface_height(profile: SurfaceProfile, x1, x2):
    return profile(x1, x2)


# --------------------------------------------------------------------------
# body, materials, geometry spec
# --------------------------------------------------------------------------

def fibonacci_sphere(n: int) -> np.ndarray:
    """Nearly uniform unit vectors (golden-angle spiral)."""
    if n <= 1:
        return np.array([[0.0, 0.0, 1.0]])[:n]
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    rho = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + 5**0.5) * k
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


@dataclass(frozen=True)
class Ellipsoid:
    center: tuple
    semi_axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(v) for v in self.semi_axes))
        if len(self.center) != 3 or len(self.semi_axes) != 3:
            raise ValueError("ellipsoid needs a 3D center and three semi-axes")

    @classmethod
    def sphere(cls, center, radius: float) -> "Ellipsoid":
        return cls(tuple(center), (radius, radius, radius))

    def level(self, x) -> np.ndarray:
        """Squared scaled radius; < 1 inside, == 1 on the surface."""
        y = (np.asarray(x, float) - np.array(self.center)) / np.array(self.semi_axes)
        return np.sum(y * y, axis=-1)

    def surface_points(self, n: int) -> np.ndarray:
        return np.array(self.center) + fibonacci_sphere(n) * np.array(self.semi_axes)

    def area(self) -> float:
        # Knud Thomsen approximation, p = 1.6075
        a, b, c = self.semi_axes
        p = 1.6075
        return 4 * np.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3) ** (1 / p)

    @property
    def volume(self) -> float:
        a, b, c = self.semi_axes
        return 4.0 / 3.0 * np.pi * a * b * c


@dataclass(frozen=True)
class MaterialParams:
    rho_e: float = 2.0
    rho_0: float = 1.0
    c: float = 1.0
    lam: float = 2.0
    mu: float = 1.0

    def violations(self) -> list:
        out = []
        if not self.rho_e > 0:
            out.append("MaterialParams: rho_e > 0 violated")
        if not self.rho_0 > 0:
            out.append("MaterialParams: rho_0 > 0 violated")
        if not self.c > 0:
            out.append("MaterialParams: c > 0 violated")
        if not self.mu >= 0:
            out.append("MaterialParams: mu >= 0 violated")
        if not 3 * self.lam + 2 * self.mu >= 0:
            out.append("MaterialParams: 3*lambda + 2*mu >= 0 violated")
        return out

    def validate(self) -> "MaterialParams":
        bad = self.violations()
        if bad:
            raise ValueError("; ".join(bad))
        return self


class Violation(str, enum.Enum):
    NonPositiveRadius = "NonPositiveRadius"
    InvalidBody = "InvalidBody"
    BodyBelowSurface = "BodyBelowSurface"
    BodyOutsideHalfBall = "BodyOutsideHalfBall"
    SupportOutsideHalfBall = "SupportOutsideHalfBall"


@dataclass(frozen=True)
class GeometrySpec:
    R: float = 1.0
    profile: SurfaceProfile = field(default_factory=SurfaceProfile.flat)
    body: Optional[Ellipsoid] = None
    margin: float = 0.0


def validate_geometry(spec: GeometrySpec, n_probe: int = 4000) -> list:
    """Return the list of violated :class:`GeometrySpec` invariants (empty if valid)."""
    out = []
    if not spec.R > 0:
        return [Violation.NonPositiveRadius]
    if spec.profile.r_supp >= spec.R - spec.margin:
        out.append(Violation.SupportOutsideHalfBall)
    body = spec.body
    if body is not None:
        if min(body.semi_axes) <= 0:
            return out + [Violation.InvalidBody]
        # the six axis extremes catch bodies that just touch the plane or the sphere
        poles = np.array(body.center) + np.vstack([np.diag(body.semi_axes), -np.diag(body.semi_axes)])
        pts = np.vstack([body.surface_points(n_probe), poles])
        clearance = pts[:, 2] - spec.profile(pts[:, 0], pts[:, 1])
        if clearance.min() <= spec.margin:
            out.append(Violation.BodyBelowSurface)
        if np.linalg.norm(pts, axis=1).max() >= spec.R - spec.margin:
            out.append(Violation.BodyOutsideHalfBall)
    return out


# --------------------------------------------------------------------------
# mesh model
# --------------------------------------------------------------------------

def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeshModel:
    """Conforming tetrahedral mesh of the half-ball with tagged boundary facets.

    Facets are oriented so that ``cross(v1 - v0, v2 - v0)`` points along the
    outward normal: out of the solid on Gamma, out of the half-ball on Gamma_R^+,
    and out of the fluid region on Gamma_0.
    """

    vertices: np.ndarray
    tets: np.ndarray
    regions: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, float))
        object.__setattr__(self, "tets", _frozen(self.tets, np.int64))
        object.__setattr__(self, "regions", _frozen(self.regions, np.int64))
        object.__setattr__(self, "facets", _frozen(self.facets, np.int64))
        object.__setattr__(self, "facet_tags", _frozen(self.facet_tags, np.int64))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def normals(self) -> np.ndarray:
        p = self.vertices[self.facets]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @property
    def facet_areas(self) -> np.ndarray:
        p = self.vertices[self.facets]
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    def signed_volumes(self) -> np.ndarray:
        p = self.vertices[self.tets]
        return np.einsum("ij,ij->i", np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]),
                         p[:, 3] - p[:, 0]) / 6.0

    def facets_with(self, tag: int) -> np.ndarray:
        return self.facets[self.facet_tags == tag]

    def region_vertices(self, region: int) -> np.ndarray:
        return np.unique(self.tets[self.regions == region])

    def tag_vertices(self, tag: int) -> np.ndarray:
        return np.unique(self.facets_with(tag))

    def max_diameter(self) -> float:
        p = self.vertices[self.tets]
        best = 0.0
        for i in range(4):
            for j in range(i + 1, 4):
                best = max(best, float(np.linalg.norm(p[:, i] - p[:, j], axis=1).max()))
        return best

    @property
    def tags_present(self) -> set:
        return set(int(t) for t in np.unique(self.facet_tags))


# --------------------------------------------------------------------------
# mesher
# --------------------------------------------------------------------------

_KIND_FLUID, _KIND_BODY_SURFACE, _KIND_BODY_INTERIOR = 0, 1, 2


def _hemisphere_shell(r, h, phase):
    """Latitude rings on the upper hemisphere of radius r with spacing ~h."""
    n_lat = max(1, int(np.ceil(0.5 * np.pi * r / h)))
    pts, on_plane = [[0.0, 0.0, r]], [False]
    for j in range(1, n_lat + 1):
        theta = 0.5 * np.pi * j / n_lat
        n_az = max(3, int(round(2 * np.pi * r * np.sin(theta) / h)))
        az = 2 * np.pi * (np.arange(n_az) + 0.5 * ((j + phase) % 2)) / n_az
        z = 0.0 if j == n_lat else r * np.cos(theta)
        ring = np.column_stack([r * np.sin(theta) * np.cos(az), r * np.sin(theta) * np.sin(az),
                                np.full(n_az, z)])
        pts.extend(ring.tolist())
        on_plane.extend([j == n_lat] * n_az)
    return np.array(pts), np.array(on_plane)


def _reference_points(spec: GeometrySpec, h: float, rng: np.random.Generator):
    R = spec.R
    n_shell = max(2, int(np.ceil(R / h)))
    pts, plane, sphere = [np.zeros((1, 3))], [np.array([True])], [np.array([False])]
    for k in range(1, n_shell + 1):
        p, on_plane = _hemisphere_shell(R * k / n_shell, h, k)
        pts.append(p)
        plane.append(on_plane)
        sphere.append(np.full(len(p), k == n_shell))
    pts = np.vstack(pts)
    plane = np.concatenate(plane)
    sphere = np.concatenate(sphere)
    kind = np.zeros(len(pts), dtype=int)

    body = spec.body
    if body is not None:
        axes = np.array(body.semi_axes)
        a_min = axes.min()
        hs = min(h, 0.9 * a_min)
        gap = 0.75 * hs
        # clear a band around the body; keep boundary shells untouched
        lvl = np.sqrt(body.level(pts))
        keep = (lvl > 1.0 + gap / a_min) | plane | sphere
        pts, plane, sphere, kind = pts[keep], plane[keep], sphere[keep], kind[keep]
        n_surf = max(12, int(np.ceil(body.area() / (0.7 * hs * hs))))
        surf = body.surface_points(n_surf)
        layers = [surf]
        kinds = [np.full(len(surf), _KIND_BODY_SURFACE)]
        t = 1.0 - gap / a_min
        while t > 0.5 * hs / a_min:
            n_t = max(4, int(np.ceil(n_surf * t * t)))
            lay = np.array(body.center) + fibonacci_sphere(n_t) * axes * t
            layers.append(lay)
            kinds.append(np.full(len(lay), _KIND_BODY_INTERIOR))
            t -= hs / a_min
        layers.append(np.array([body.center]))
        kinds.append(np.array([_KIND_BODY_INTERIOR]))
        extra = np.vstack(layers)
        pts = np.vstack([pts, extra])
        plane = np.concatenate([plane, np.zeros(len(extra), bool)])
        sphere = np.concatenate([sphere, np.zeros(len(extra), bool)])
        kind = np.concatenate([kind] + kinds)

    # small deterministic jitter breaks cospherical / cocircular degeneracies
    jit = 0.03 * h * rng.uniform(-1, 1, size=pts.shape)
    free = ~(plane | sphere) & (kind == _KIND_FLUID)
    pts[free] += jit[free]
    surf_body = kind == _KIND_BODY_SURFACE
    if surf_body.any():
        q = pts[surf_body] + jit[surf_body]
        y = (q - np.array(body.center)) / np.array(body.semi_axes)
        y /= np.linalg.norm(y, axis=1)[:, None]
        pts[surf_body] = np.array(body.center) + y * np.array(body.semi_axes)
    interior_body = kind == _KIND_BODY_INTERIOR
    pts[interior_body] += 0.3 * jit[interior_body]
    on_sph = sphere & ~plane
    q = pts[on_sph] + jit[on_sph]
    q[:, 2] = np.maximum(q[:, 2], 0.05 * h)
    pts[on_sph] = R * q / np.linalg.norm(q, axis=1)[:, None]
    rim = sphere & plane
    ang = np.arctan2(pts[rim, 1], pts[rim, 0]) + 0.03 * h / R * rng.uniform(-1, 1, rim.sum())
    pts[rim] = np.column_stack([R * np.cos(ang), R * np.sin(ang), np.zeros(rim.sum())])
    inner_plane = plane & ~sphere
    inner_plane[0] = False  # keep the origin fixed
    pts[inner_plane, :2] += jit[inner_plane, :2]
    pts[plane, 2] = 0.0
    return pts, plane, sphere, kind


def _blend_height(spec: GeometrySpec) -> float:
    R, rs = spec.R, spec.profile.r_supp
    H = np.sqrt(max(R * R - rs * rs, 0.0))
    if spec.body is not None:
        pts = spec.body.surface_points(2000)
        H = min(H, pts[:, 2].min())
    return 0.9 * H


def _orient(p, faces, opposite):
    """Order face vertices so the normal points away from ``opposite``."""
    a, b, c = p[faces[:, 0]], p[faces[:, 1]], p[faces[:, 2]]
    n = np.cross(b - a, c - a)
    flip = np.einsum("ij,ij->i", n, p[opposite] - a) > 0
    out = faces.copy()
    out[flip, 1], out[flip, 2] = faces[flip, 2], faces[flip, 1]
    return out


def build_mesh(spec: GeometrySpec, target_h: float, seed: int = 0, _attempts: int = 4) -> MeshModel:
    """Conforming P1 mesh of the fluid region and the elastic body.

    Raises :class:`GeometryViolation` when the geometry spec is invalid or the
    surface amplitude is too large for the vertical blend.
    """
    bad = validate_geometry(spec)
    if bad:
        raise GeometryViolation(", ".join(v.value for v in bad))
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    H = _blend_height(spec)
    f = spec.profile
    if spec.profile.r_supp > 0:
        rr = np.linspace(-f.r_supp, f.r_supp, 201)
        X1, X2 = np.meshgrid(rr, rr)
        if np.max(f(X1, X2)) >= 0.5 * H:
            raise GeometryViolation("surface amplitude too large relative to body clearance")

    last_err = None
    for attempt in range(_attempts):
        try:
            return _build(spec, target_h, H, np.random.default_rng(seed + 7919 * attempt))
        except _MeshFailure as err:
            last_err = err
    raise RuntimeError(f"mesher failed after {_attempts} attempts: {last_err}")


class _MeshFailure(Exception):
    pass


def _shape_quality(pts, tets):
    """Volume over cubed longest edge, scaled to 1 for a regular tetrahedron."""
    p = pts[tets]
    vol = np.abs(np.einsum("ij,ij->i", np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), p[:, 3] - p[:, 0])) / 6
    edges = np.stack([np.linalg.norm(p[:, i] - p[:, j], axis=1) for i in range(4) for j in range(i + 1, 4)], 1)
    return 6 * np.sqrt(2) * vol / edges.max(axis=1) ** 3


def _triangulate(pts, movable, h, rng, rounds=6, q_bad=0.05):
    """Delaunay with a few rounds of random sliver perturbation of movable points."""
    for _ in range(rounds):
        tets = Delaunay(pts).simplices.astype(np.int64)
        bad = np.unique(tets[_shape_quality(pts, tets) < q_bad])
        bad = bad[movable[bad]]
        if len(bad) == 0:
            return pts, tets
        pts = pts.copy()
        pts[bad] += 0.12 * h * rng.uniform(-1, 1, (len(bad), 3))
    return pts, Delaunay(pts).simplices.astype(np.int64)


def _build(spec, h, H, rng):
    pts, plane, sphere, kind = _reference_points(spec, h, rng)
    pts, tets = _triangulate(pts, ~(plane | sphere) & (kind == _KIND_FLUID), h, rng)
    p = pts[tets]
    vol = np.einsum("ij,ij->i", np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), p[:, 3] - p[:, 0]) / 6
    flat = np.abs(vol) <= 1e-9 * h**3
    if flat.any():
        # only coplanar slivers glued onto the flat bottom are harmless to drop
        if not np.all(plane[tets[flat]]):
            raise _MeshFailure("interior degenerate tetrahedron")
        tets, vol = tets[~flat], vol[~flat]
    neg = vol < 0
    tets[neg, 2], tets[neg, 3] = tets[neg, 3].copy(), tets[neg, 2].copy()

    regions = np.full(len(tets), FLUID)
    if spec.body is not None:
        all_body = np.all(kind[tets] != _KIND_FLUID, axis=1)
        cen = pts[tets].mean(axis=1)
        regions[all_body & (spec.body.level(cen) < 1.0)] = SOLID

    # faces and adjacency
    local = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])
    faces = tets[:, local].reshape(-1, 3)
    opp = tets[:, [0, 1, 2, 3]].reshape(-1)
    owner = np.repeat(np.arange(len(tets)), 4)
    key = np.sort(faces, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if counts.max() > 2:
        raise _MeshFailure("non-manifold face")
    once = counts[inv] == 1
    # interface: faces seen twice with differing regions, keep the solid side
    twice = ~once
    order = np.argsort(inv[twice], kind="stable")
    tw_idx = np.nonzero(twice)[0][order].reshape(-1, 2)
    r0, r1 = regions[owner[tw_idx[:, 0]]], regions[owner[tw_idx[:, 1]]]
    mixed = r0 != r1
    solid_side = np.where(r0[mixed] == SOLID, tw_idx[mixed, 0], tw_idx[mixed, 1])

    b_idx = np.nonzero(once)[0]
    if np.any(regions[owner[b_idx]] == SOLID):
        raise _MeshFailure("solid touches the outer boundary")
    bf = faces[b_idx]
    is_plane = np.all(plane[bf], axis=1)
    is_sphere = np.all(sphere[bf], axis=1) & ~is_plane
    if not np.all(is_plane | is_sphere):
        raise _MeshFailure("untagged boundary face")
    if_faces = faces[solid_side]
    if np.any(kind[if_faces] != _KIND_BODY_SURFACE):
        raise _MeshFailure("interface facet off the body surface")

    # deform onto the rough surface
    x = pts.copy()
    below = x[:, 2] < H
    fx = spec.profile(x[below, 0], x[below, 1])
    x[below, 2] = x[below, 2] + fx * (1.0 - x[below, 2] / H)

    facets = np.vstack([_orient(x, if_faces, opp[solid_side]),
                        _orient(x, bf[is_plane], opp[b_idx[is_plane]]),
                        _orient(x, bf[is_sphere], opp[b_idx[is_sphere]])])
    tags = np.concatenate([np.full(len(if_faces), INTERFACE),
                           np.full(is_plane.sum(), SURFACE),
                           np.full(is_sphere.sum(), HEMISPHERE)])

    # drop vertices not used by any tetrahedron
    used = np.unique(tets)
    remap = -np.ones(len(x), dtype=np.int64)
    remap[used] = np.arange(len(used))
    mesh = MeshModel(x[used], remap[tets], regions, remap[facets], tags)
    if mesh.signed_volumes().min() <= 0:
        raise _MeshFailure("inverted element after surface deformation")
    return mesh


# --------------------------------------------------------------------------
# ASCII mesh I/O
# --------------------------------------------------------------------------

def write_mesh(mesh: MeshModel, path) -> None:
    lines = ["FSIMESH 1", str(mesh.n_vertices)]
    lines += [f"{a!r} {b!r} {c!r}" for a, b, c in mesh.vertices.tolist()]
    lines.append(str(len(mesh.tets)))
    lines += [f"{a} {b} {c} {d} {r}" for (a, b, c, d), r in zip(mesh.tets.tolist(), mesh.regions.tolist())]
    lines.append(str(len(mesh.facets)))
    lines += [f"{a} {b} {c} {t}" for (a, b, c), t in zip(mesh.facets.tolist(), mesh.facet_tags.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> MeshModel:
    tokens = Path(path).read_text().split("\n")
    lines = [ln.strip() for ln in tokens if ln.strip()]
    if not lines or lines[0] != "FSIMESH 1":
        raise FormatError("missing 'FSIMESH 1' header")
    try:
        pos = 1
        nv = int(lines[pos]); pos += 1
        verts = np.array([[float(v) for v in ln.split()] for ln in lines[pos:pos + nv]]).reshape(nv, 3)
        pos += nv
        nt = int(lines[pos]); pos += 1
        tet_rows = np.array([[int(v) for v in ln.split()] for ln in lines[pos:pos + nt]]).reshape(nt, 5)
        pos += nt
        nf = int(lines[pos]); pos += 1
        fac_rows = np.array([[int(v) for v in ln.split()] for ln in lines[pos:pos + nf]]).reshape(nf, 4)
        pos += nf
    except (ValueError, IndexError) as err:
        raise FormatError(f"malformed mesh file: {err}") from err
    if pos != len(lines):
        raise FormatError("trailing data after facet block")
    return MeshModel(verts, tet_rows[:, :4], tet_rows[:, 4], fac_rows[:, :3], fac_rows[:, 3])
