"""Synthetic intrinsically symmetric shapes with exact ground-truth maps.

Every generated mesh is built as a random half surface that is mirrored
across the x=0 plane and welded along the seam, so the reflection involution
is known combinatorially and is exact. A smooth seeded warp then destroys the
extrinsic mirror while keeping the metric distortion small, which leaves the
intrinsic symmetry (and the ground-truth map) intact up to the warp budget.

Sign labels come from an analytic oracle: the mass-weighted correlation of an
eigenfunction with its pullback under the ground-truth map.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import csgraph

from .errors import (
    DistortionExceeded,
    GenerationFailure,
    NoContactRegion,
    RepeatedEigenvalue,
)
from .fmap import MINUS, PLUS, UNKNOWN, PointMap, SignVector
from .mesh import TriMesh, normalize_area, validate_mesh, vertex_adjacency
from .spectral import EigGroups, SpectralBasis, compute_basis, group_repeated

BASE_SHAPES = ("ellipsoid-blob", "tube-creature", "plate-with-appendages")
ORACLE_CONFIDENCE = 0.9


@dataclass
class GenConfig:
    seed: int = 0
    base_shape: str = "ellipsoid-blob"
    half_resolution: int = 10
    warp_magnitude: float = 0.02
    hole_fraction: float = 0.0

    def __post_init__(self):
        if self.base_shape not in BASE_SHAPES:
            raise ValueError(f"base_shape must be one of {BASE_SHAPES}")
        if not 0.0 <= self.warp_magnitude <= 0.1:
            raise ValueError("warp_magnitude must be in [0, 0.1]")
        if not 0.0 <= self.hole_fraction <= 0.05:
            raise ValueError("hole_fraction must be in [0, 0.05]")


@dataclass
class LabeledShape:
    mesh: TriMesh
    gt_map: PointMap
    basis: SpectralBasis
    labels: SignVector
    provenance: dict = field(default_factory=dict)

    def groups(self, rel_tol: float = 1e-2) -> EigGroups:
        return group_repeated(self.basis, rel_tol)


# ---------------------------------------------------------------------------
# reference primitives


def octahedron(radius: float = 1.0) -> TriMesh:
    v = radius * np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
            [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
        ]
    )
    return TriMesh(v, f)


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriMesh:
    """Subdivided icosahedron projected onto the sphere (642 verts at level 3)."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(p) for p in v]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                p = np.asarray(verts[a]) + np.asarray(verts[b])
                p /= np.linalg.norm(p)
                cache[key] = len(verts)
                verts.append(tuple(p))
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = new_faces
    return TriMesh(radius * np.asarray(verts), np.asarray(f, dtype=np.int64))


# ---------------------------------------------------------------------------
# sign oracle


def oracle_sign(basis: SpectralBasis, gt_map: PointMap, i: int, groups: EigGroups | None = None):
    """Sign of eigenfunction i under the map: correlation of phi_i with its pullback.

    Returns (sign, confidence) where confidence is |<phi_i o T, phi_i>_A|
    normalized over the vertices the map covers (entries of -1 mark dropped
    vertices on punched shapes). Requires a non-repeating eigenvalue.
    """
    if groups is None:
        groups = group_repeated(basis)
    if not groups.singleton_mask()[i]:
        raise RepeatedEigenvalue(f"eigenvalue {i} sits in a repeated group")
    t = gt_map.target
    valid = t >= 0
    phi = basis.phi[:, i]
    a = basis.masses
    num = float(np.sum(a[valid] * phi[t[valid]] * phi[valid]))
    den = float(np.sum(a[valid] * phi[valid] ** 2))
    if den <= 0:
        return UNKNOWN, 0.0
    s = num / den
    return (PLUS if s >= 0 else MINUS), abs(s)


def oracle_labels(basis: SpectralBasis, gt_map: PointMap, groups: EigGroups | None = None,
                  min_confidence: float = ORACLE_CONFIDENCE) -> SignVector:
    """Label every eigenfunction; repeated or low-confidence ones are Unknown."""
    if groups is None:
        groups = group_repeated(basis)
    singleton = groups.singleton_mask()
    signs = np.zeros(basis.k, dtype=np.int8)
    conf = np.zeros(basis.k)
    for i in range(basis.k):
        if not singleton[i]:
            continue
        s, c = oracle_sign(basis, gt_map, i, groups)
        conf[i] = c
        if c >= min_confidence:
            signs[i] = s
    return SignVector(signs=signs, confidence=conf)


# ---------------------------------------------------------------------------
# half-mesh construction (mirror plane x = 0)


def _mirror_weld(half_verts, half_faces, seam_mask):
    """Mirror a half mesh across x=0, weld seam vertices, return (mesh, pi).

    ``seam_mask`` marks vertices lying exactly on the plane (shared by both
    halves). The involution pi maps every vertex to its mirror partner and
    fixes the seam.
    """
    n_half = len(half_verts)
    partner = np.full(n_half, -1, dtype=np.int64)
    verts = [half_verts]
    next_id = n_half
    mirror_ids = np.empty(n_half, dtype=np.int64)
    for v in range(n_half):
        if seam_mask[v]:
            mirror_ids[v] = v
        else:
            mirror_ids[v] = next_id
            partner[v] = next_id
            next_id += 1
    extra = half_verts[~seam_mask].copy()
    extra[:, 0] *= -1.0
    verts.append(extra)
    all_verts = np.vstack(verts)
    mirrored_faces = mirror_ids[half_faces][:, ::-1]  # flip winding
    all_faces = np.vstack([half_faces, mirrored_faces])
    pi = np.empty(next_id, dtype=np.int64)
    for v in range(n_half):
        pi[v] = mirror_ids[v]
        if not seam_mask[v]:
            pi[mirror_ids[v]] = v
    mesh = TriMesh(all_verts, all_faces)
    return mesh, PointMap(target=pi)


def _grid_faces(rows, cols, wrap_rows=False):
    """Quad-grid triangulation indices for a (rows x cols) vertex lattice."""
    faces = []
    r_pairs = [(i, i + 1) for i in range(rows - 1)]
    if wrap_rows:
        r_pairs.append((rows - 1, 0))
    for i0, i1 in r_pairs:
        for j in range(cols - 1):
            a = i0 * cols + j
            b = i0 * cols + j + 1
            c = i1 * cols + j
            d = i1 * cols + j + 1
            faces.append([a, b, d])
            faces.append([a, d, c])
    return np.asarray(faces, dtype=np.int64)


def _bump_field(rng, n_bumps, width_range, amp_range):
    centers = rng.standard_normal((n_bumps, 3))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    widths = rng.uniform(*width_range, size=n_bumps)
    amps = rng.uniform(*amp_range, size=n_bumps) * rng.choice([-1, 1], size=n_bumps)

    def field(dirs):
        r = np.ones(len(dirs))
        for c, w, a in zip(centers, widths, amps):
            d2 = ((dirs - c) ** 2).sum(axis=1)
            r += a * np.exp(-d2 / (2 * w * w))
        return np.clip(r, 0.35, None)

    return field


def _half_sphere_shape(rng, res, scale, bumps):
    """Half-sphere grid with a random radial field; returns (verts, faces, seam).

    ``scale`` = (sx, sy, sz) axis scaling; distinct values split eigenvalue
    multiplicities, which keeps the low spectrum generic. Scaling x preserves
    the x=0 mirror.
    """
    n_theta = res + 2
    n_beta = res + 1
    thetas = np.linspace(0.0, np.pi, n_theta + 2)[1:-1]
    betas = np.linspace(-np.pi / 2, np.pi / 2, n_beta)
    tt, bb = np.meshgrid(thetas, betas, indexing="ij")
    dirs = np.stack(
        [np.sin(tt) * np.cos(bb), np.cos(tt), np.sin(tt) * np.sin(bb)], axis=-1
    ).reshape(-1, 3)
    field = _bump_field(rng, *bumps)
    radius = field(dirs)
    grid = dirs * radius[:, None] * np.asarray(scale)[None, :]
    pole_r = field(np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]))
    north = np.array([0.0, scale[1] * pole_r[0], 0.0])
    south = np.array([0.0, -scale[1] * pole_r[1], 0.0])
    verts = np.vstack([grid, north[None, :], south[None, :]])
    n_grid = len(grid)
    id_north = n_grid
    id_south = n_grid + 1
    faces = list(_grid_faces(n_theta, n_beta))
    for j in range(n_beta - 1):
        faces.append([id_north, j + 1, j])
        base = (n_theta - 1) * n_beta
        faces.append([id_south, base + j, base + j + 1])
    faces = np.asarray(faces, dtype=np.int64)
    seam = np.zeros(len(verts), dtype=bool)
    seam_cols = np.zeros((n_theta, n_beta), dtype=bool)
    seam_cols[:, 0] = True
    seam_cols[:, -1] = True
    seam[:n_grid] = seam_cols.ravel()
    seam[id_north] = True
    seam[id_south] = True
    # numerical exactness: seam vertices snapped onto the plane
    verts[seam, 0] = 0.0
    return verts, faces, seam


def _half_tube_shape(rng, res):
    """Half tube around a pinched closed spine in the x=0 plane.

    The pinch brings two wall sections close together, guaranteeing a
    near-self-contact region for the topology-gluing perturbation.
    """
    n_u = 2 * res
    n_psi = res - 1 if res % 2 == 0 else res  # odd keeps a mid row off the plane
    n_psi = max(n_psi, 5)
    us = np.linspace(0.0, 2 * np.pi, n_u, endpoint=False)
    psis = np.linspace(0.0, np.pi, n_psi)
    base = 1.0
    pinch = rng.uniform(0.62, 0.72)
    phase = rng.uniform(0, 2 * np.pi)
    rho = base * (1.0 + pinch * (np.cos(2 * (us - phase)) - 1.0) * 0.5)
    tube_r = 0.28 * base * (1.0 + 0.25 * np.sin(us * 3 + rng.uniform(0, 2 * np.pi)))
    spine = np.stack(
        [np.zeros_like(us), rho * np.cos(us), rho * np.sin(us)], axis=-1
    )
    d_rho = np.gradient(rho, us)
    tx = np.zeros_like(us)
    ty = d_rho * np.cos(us) - rho * np.sin(us)
    tz = d_rho * np.sin(us) + rho * np.cos(us)
    tnorm = np.sqrt(ty**2 + tz**2)
    ty, tz = ty / tnorm, tz / tnorm
    # in-plane normal perpendicular to the tangent
    ny, nz = -tz, ty
    verts = []
    for iu in range(n_u):
        for psi in psis:
            x = tube_r[iu] * np.sin(psi)
            off_n = tube_r[iu] * np.cos(psi)
            verts.append(
                [
                    x,
                    spine[iu, 1] + off_n * ny[iu],
                    spine[iu, 2] + off_n * nz[iu],
                ]
            )
    verts = np.asarray(verts)
    faces = _grid_faces(n_u, n_psi, wrap_rows=True)
    seam = np.zeros(len(verts), dtype=bool)
    cols = np.zeros((n_u, n_psi), dtype=bool)
    cols[:, 0] = True
    cols[:, -1] = True
    seam[:] = cols.ravel()
    verts[seam, 0] = 0.0
    return verts, faces, seam


def make_symmetric_mesh(config: GenConfig) -> LabeledShape:
    """Random mirror-symmetric shape with exact combinatorial involution.

    Retries with sub-seeds if a random draw produces a degenerate surface.
    """
    for attempt in range(6):
        rng = np.random.default_rng(
            np.random.SeedSequence([0x5A5A, config.seed, attempt])
        )
        if config.base_shape == "ellipsoid-blob":
            scale = (1.0, rng.uniform(1.45, 1.9), rng.uniform(0.5, 0.72))
            verts, faces, seam = _half_sphere_shape(
                rng, config.half_resolution, scale, (4, (0.45, 0.9), (0.15, 0.4))
            )
        elif config.base_shape == "plate-with-appendages":
            scale = (1.0, rng.uniform(0.28, 0.4), rng.uniform(1.4, 1.8))
            verts, faces, seam = _half_sphere_shape(
                rng, config.half_resolution, scale, (6, (0.3, 0.6), (0.25, 0.55))
            )
        else:
            verts, faces, seam = _half_tube_shape(rng, max(config.half_resolution, 7))
        try:
            mesh, gt = _mirror_weld(verts, faces, seam)
            areas = mesh.face_areas()
            if areas.min() <= 1e-9 * areas.mean():
                raise GenerationFailure("near-degenerate faces")
            report = validate_mesh(mesh)
            if report.components != 1:
                raise GenerationFailure("disconnected draw")
            mesh = normalize_area(mesh)
            return LabeledShape(
                mesh=mesh,
                gt_map=gt,
                basis=None,
                labels=None,
                provenance={
                    "base_shape": config.base_shape,
                    "seed": config.seed,
                    "attempt": attempt,
                    "half_resolution": config.half_resolution,
                },
            )
        except GenerationFailure:
            continue
    raise GenerationFailure(
        f"no valid draw for seed {config.seed} ({config.base_shape})"
    )


def attach_basis(shape: LabeledShape, k: int, seed: int = 0) -> LabeledShape:
    """Solve the eigenproblem and label the shape with the oracle."""
    basis = compute_basis(shape.mesh, k, seed=seed)
    labels = oracle_labels(basis, shape.gt_map)
    return replace(shape, basis=basis, labels=labels)


# ---------------------------------------------------------------------------
# near-isometric warping


def _twist(points, axis, angle_fn):
    """Rotate each point around ``axis`` by an angle depending on its coordinate."""
    p = points.copy()
    others = [i for i in range(3) if i != axis]
    ang = angle_fn(points[:, axis])
    ca, sa = np.cos(ang), np.sin(ang)
    u, v = points[:, others[0]], points[:, others[1]]
    p[:, others[0]] = ca * u - sa * v
    p[:, others[1]] = sa * u + ca * v
    return p


def edge_length_distortion(mesh_a: TriMesh, verts_b: np.ndarray) -> float:
    """Max relative change of edge length between two embeddings."""
    edges, _ = mesh_a.edge_face_counts()
    la = np.linalg.norm(
        mesh_a.vertices[edges[:, 0]] - mesh_a.vertices[edges[:, 1]], axis=1
    )
    lb = np.linalg.norm(verts_b[edges[:, 0]] - verts_b[edges[:, 1]], axis=1)
    return float(np.abs(lb / la - 1.0).max())


def best_reflection_residual(mesh: TriMesh, n_samples: int = 400, seed: int = 0) -> float:
    """Residual of the best PCA-candidate reflection plane (mean NN distance).

    Near zero for an extrinsically mirror-symmetric embedding; large once a
    warp destroys the spatial mirror.
    """
    from scipy.spatial import cKDTree

    v = mesh.vertices
    centroid = v.mean(axis=0)
    x = v - centroid
    cov = x.T @ x
    _, axes = np.linalg.eigh(cov)
    tree = cKDTree(v)
    rng = np.random.default_rng(seed)
    sel = rng.choice(len(v), size=min(n_samples, len(v)), replace=False)
    best = np.inf
    for k in range(3):
        n = axes[:, k]
        reflected = v[sel] - 2.0 * np.outer(x[sel] @ n, n)
        d, _ = tree.query(reflected)
        best = min(best, float(d.mean()))
    return best


def warp_near_isometric(shape: LabeledShape, config: GenConfig, k: int | None = None,
                        basis_seed: int = 0) -> LabeledShape:
    """Smooth seeded bend/twist bounded by the edge-distortion budget.

    The ground-truth map is unchanged; labels are recomputed on the warped
    basis when the input shape carried one (or when ``k`` is given).
    """
    if config.warp_magnitude == 0.0:
        return shape
    rng = np.random.default_rng(np.random.SeedSequence([0x3A47, config.seed]))
    v = shape.mesh.vertices
    extent = v.max(axis=0) - v.min(axis=0)
    rate = rng.uniform(0.7, 1.3) * 2.0 * np.pi / max(extent[1], 1e-9)
    rate2 = rng.uniform(0.7, 1.3) * 2.0 * np.pi / max(extent[2], 1e-9)
    ph1, ph2 = rng.uniform(0, 2 * np.pi, size=2)
    # first-order estimate: twist angle gradient ~ amp * rate * radius
    radius = np.abs(v).max()
    amp = config.warp_magnitude / max(rate * radius, 1e-9)
    for _ in range(6):
        warped = _twist(v, 1, lambda y: amp * np.sin(rate * y + ph1))
        warped = _twist(warped, 2, lambda z: 0.7 * amp * np.sin(rate2 * z + ph2))
        mesh = normalize_area(shape.mesh.with_vertices(warped))
        dist = edge_length_distortion(shape.mesh, mesh.vertices)
        if dist <= config.warp_magnitude:
            break
        amp *= 0.5
    else:
        raise DistortionExceeded(
            f"warp still at {dist:.4f} > {config.warp_magnitude} after retries"
        )
    out = replace(
        shape,
        mesh=mesh,
        provenance={**shape.provenance, "warp_magnitude": config.warp_magnitude},
    )
    want_k = k or (shape.basis.k if shape.basis is not None else None)
    if want_k:
        out = attach_basis(out, want_k, seed=basis_seed)
    else:
        out = replace(out, basis=None, labels=None)
    return out


# ---------------------------------------------------------------------------
# robustness perturbations


def punch_holes(shape: LabeledShape, config: GenConfig, k: int | None = None,
                basis_seed: int = 0) -> LabeledShape:
    """Remove disk-shaped face patches (up to hole_fraction of faces).

    Patches that would disconnect the surface are skipped. The ground-truth
    map is restricted: vertices whose partner disappeared map to -1.
    """
    if config.hole_fraction <= 0:
        raise ValueError("hole_fraction must be positive to punch holes")
    mesh = shape.mesh
    rng = np.random.default_rng(np.random.SeedSequence([0x401E, config.seed]))
    budget = int(config.hole_fraction * mesh.n_faces)
    centers = mesh.vertices[mesh.faces].mean(axis=1)
    hole_r = np.sqrt(config.hole_fraction * mesh.area() / np.pi)
    keep = np.ones(mesh.n_faces, dtype=bool)
    removed = 0
    for _ in range(8):
        if removed >= budget:
            break
        seed_face = int(rng.integers(mesh.n_faces))
        if not keep[seed_face]:
            continue
        d = np.linalg.norm(centers - centers[seed_face], axis=1)
        patch = keep & (d < hole_r)
        idx = np.flatnonzero(patch)
        if removed + len(idx) > budget:
            idx = idx[np.argsort(d[idx])][: budget - removed]
        trial = keep.copy()
        trial[idx] = False
        if not trial.any():
            continue
        sub = TriMesh(mesh.vertices, mesh.faces[trial])
        used = np.zeros(mesh.n_vertices, dtype=bool)
        used[mesh.faces[trial].ravel()] = True
        n_comp = csgraph.connected_components(
            vertex_adjacency(sub)[np.ix_(used, used)], directed=False, return_labels=False
        )
        if n_comp != 1:
            continue  # WouldDisconnect: skip this patch
        keep = trial
        removed += len(idx)
    faces = mesh.faces[keep]
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[faces.ravel()] = True
    remap = np.cumsum(used) - 1
    new_faces = remap[faces]
    new_verts = mesh.vertices[used]
    old_pi = shape.gt_map.target
    new_pi = np.full(int(used.sum()), -1, dtype=np.int64)
    for old in np.flatnonzero(used):
        tgt = old_pi[old]
        if tgt >= 0 and used[tgt]:
            new_pi[remap[old]] = remap[tgt]
    new_mesh = normalize_area(TriMesh(new_verts, new_faces))
    out = replace(
        shape,
        mesh=new_mesh,
        gt_map=PointMap(target=new_pi),
        provenance={**shape.provenance, "hole_fraction": config.hole_fraction,
                    "faces_removed": int(removed)},
    )
    want_k = k or (shape.basis.k if shape.basis is not None else None)
    if want_k:
        out = attach_basis(out, want_k, seed=basis_seed)
    else:
        out = replace(out, basis=None, labels=None)
    return out


def glue_topology(shape: LabeledShape, config: GenConfig, k: int | None = None,
                  basis_seed: int = 0, max_welds: int = 6) -> LabeledShape:
    """Weld near-contact vertex pairs, raising the genus.

    Requires a region where two non-adjacent wall sections nearly touch (the
    tube generator guarantees one). The ground-truth map is kept approximately
    (welded representatives inherit it).
    """
    from scipy.spatial import cKDTree

    mesh = shape.mesh
    edges, _ = mesh.edge_face_counts()
    mean_edge = float(
        np.linalg.norm(
            mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1
        ).mean()
    )
    contact_r = 1.8 * mean_edge
    adj = vertex_adjacency(mesh)
    two_ring = (adj @ adj + adj).tocsr()
    tree = cKDTree(mesh.vertices)
    pairs = tree.query_pairs(contact_r, output_type="ndarray")
    candidates = []
    for u_, v_ in pairs:
        if two_ring[u_, v_] == 0:
            candidates.append((float(np.linalg.norm(mesh.vertices[u_] - mesh.vertices[v_])), int(u_), int(v_)))
    if not candidates:
        raise NoContactRegion("no non-adjacent vertex pairs within contact radius")
    candidates.sort()
    merge = np.arange(mesh.n_vertices)
    welded = []
    for _, u_, v_ in candidates:
        if len(welded) >= max_welds:
            break
        if merge[u_] != u_ or merge[v_] != v_:
            continue
        if any(u_ == a or v_ == a or u_ == b or v_ == b for a, b in welded):
            continue
        merge[v_] = u_
        welded.append((u_, v_))
    verts = mesh.vertices.copy()
    for u_, v_ in welded:
        verts[u_] = 0.5 * (mesh.vertices[u_] + mesh.vertices[v_])
    faces = merge[mesh.faces]
    ok = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 0] != faces[:, 2])
    )
    faces = faces[ok]
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[faces.ravel()] = True
    remap = np.cumsum(used) - 1
    new_faces = remap[faces]
    new_verts = verts[used]
    old_pi = shape.gt_map.target
    n_new = int(used.sum())
    new_pi = np.full(n_new, -1, dtype=np.int64)
    for old in np.flatnonzero(used):
        tgt = old_pi[old]
        if tgt >= 0:
            tgt = merge[tgt]
            if used[tgt]:
                new_pi[remap[old]] = remap[tgt]
    new_mesh = normalize_area(TriMesh(new_verts, new_faces))
    out = replace(
        shape,
        mesh=new_mesh,
        gt_map=PointMap(target=new_pi),
        provenance={**shape.provenance, "welds": len(welded)},
    )
    want_k = k or (shape.basis.k if shape.basis is not None else None)
    if want_k:
        out = attach_basis(out, want_k, seed=basis_seed)
    else:
        out = replace(out, basis=None, labels=None)
    return out


# ---------------------------------------------------------------------------
# dataset builder


def generate_shape(config: GenConfig, k: int, basis_seed: int = 0,
                   max_generic_retries: int = 8) -> LabeledShape:
    """make -> warp -> label, one call.

    Draws whose low spectrum is too degenerate (more than one repeated pair
    among the first k eigenvalues) are redrawn with a perturbed seed: the
    sign structure of the map is only defined on non-repeating eigenvalues,
    so near-surfaces-of-revolution are outside the method's operating domain.
    """
    shape = None
    for attempt in range(max_generic_retries):
        cfg = replace(config, seed=config.seed + 7919 * attempt) if attempt else config
        shape = make_symmetric_mesh(cfg)
        if cfg.warp_magnitude > 0:
            shape = warp_near_isometric(shape, cfg, k=k, basis_seed=basis_seed)
        else:
            shape = attach_basis(shape, k, seed=basis_seed)
        if (~shape.groups().singleton_mask()).sum() <= 2:
            break
    shape.provenance["generic_retries"] = attempt
    return shape


def default_config(index: int, seed: int, warp_magnitude: float = 0.02,
                   half_resolution: int = 10) -> GenConfig:
    return GenConfig(
        seed=seed * 100003 + index,
        base_shape=BASE_SHAPES[index % len(BASE_SHAPES)],
        half_resolution=half_resolution,
        warp_magnitude=warp_magnitude,
    )


def build_dataset(n_shapes: int, k: int, t: int, seed: int = 0, pad: int = 4500,
                  warp_magnitude: float = 0.02, half_resolution: int = 10,
                  holdout_fraction: float = 0.25, shapes=None, log=None):
    """Generate labeled shapes and emit (FeatureMatrix, sign) samples.

    One sample per (shape, singleton eigenfunction with confident oracle
    label); everything else is dropped with the reason recorded in the
    manifest. The split is at shape level (75/25 by default), so no shape
    contributes to both sides.

    Returns (train_samples, holdout_samples, manifest, shapes).
    """
    from .signnet import build_features

    if n_shapes < 2:
        raise ValueError("need at least 2 shapes for a split")
    if shapes is None:
        shapes = []
        for idx in range(n_shapes):
            cfg = default_config(idx, seed, warp_magnitude, half_resolution)
            shapes.append(generate_shape(cfg, k))
            if log is not None:
                log(f"generated shape {idx + 1}/{n_shapes}")
    rng = np.random.default_rng(np.random.SeedSequence([0xDA7A, seed]))
    order = rng.permutation(len(shapes))
    n_holdout = max(1, int(round(holdout_fraction * len(shapes))))
    holdout_ids = set(int(x) for x in order[:n_holdout])
    train, holdout = [], []
    manifest = {
        "n_shapes": len(shapes),
        "k": k,
        "t": t,
        "seed": seed,
        "warp_magnitude": warp_magnitude,
        "shapes": [],
    }
    for idx, shape in enumerate(shapes):
        split = "holdout" if idx in holdout_ids else "train"
        groups = shape.groups()
        singleton = groups.singleton_mask()
        entry = {
            "index": idx,
            "split": split,
            "n_vertices": shape.mesh.n_vertices,
            "provenance": shape.provenance,
            "kept": [],
            "drops": [],
        }
        for i in range(k):
            if not singleton[i]:
                entry["drops"].append({"i": i, "reason": "repeated_eigenvalue"})
                continue
            if shape.labels.signs[i] == UNKNOWN:
                entry["drops"].append(
                    {"i": i, "reason": "low_confidence",
                     "confidence": float(shape.labels.confidence[i])}
                )
                continue
            fm = build_features(shape.basis, i, t, seed=seed, pad=pad)
            sample = (fm, int(shape.labels.signs[i]))
            (holdout if split == "holdout" else train).append(sample)
            entry["kept"].append(i)
        manifest["shapes"].append(entry)
    return train, holdout, manifest, shapes


# ---------------------------------------------------------------------------
# ground-truth map files ("#gtmap v1": one "src dst" pair per line, 0-based)


def save_gtmap(pm: PointMap) -> str:
    lines = ["#gtmap v1"]
    lines += [f"{i} {int(t)}" for i, t in enumerate(pm.target)]
    return "\n".join(lines) + "\n"


def load_gtmap(text: str) -> PointMap:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].startswith("#gtmap"):
        raise ValueError("missing #gtmap header")
    pairs = []
    for line in lines[1:]:
        if line.startswith("#"):
            continue
        src, dst = line.split()
        pairs.append((int(src), int(dst)))
    pairs.sort()
    return PointMap(target=np.array([d for _, d in pairs], dtype=np.int64))
