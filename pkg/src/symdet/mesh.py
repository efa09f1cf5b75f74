"""Triangle mesh representation, OFF/OBJ I/O, validation and Laplacian geometry.

Vertex positions are float64 (N, 3); faces are int64 (F, 3) indices into the
vertex array. Meshes are treated as immutable: every operation returns a new
``TriMesh`` and the stored arrays are marked read-only.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DegenerateFace, NonTriangleFace, ParseError, ZeroArea

# relative face-area floor: faces smaller than this fraction of the mean
# face area are rejected at load (scale invariant)
DEGENERATE_REL_AREA = 1e-12


class MeshLoadWarning(UserWarning):
    """Non-fatal issues found while reading a mesh file."""


class TriMesh:
    """A triangle mesh: vertex positions plus triangle connectivity.

    Parameters
    ----------
    vertices : array_like
        (N, 3) float coordinates.
    faces : array_like
        (F, 3) int indices into ``vertices``. Each face must reference three
        distinct, in-range vertices.
    """

    def __init__(self, vertices, faces):
        v = np.array(vertices, dtype=np.float64)
        f = np.array(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ParseError(f"vertices must be (N, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise NonTriangleFace(f"faces must be (F, 3), got {f.shape}")
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise ParseError("face index out of range")
            if (
                (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            ).any():
                raise DegenerateFace("face repeats a vertex")
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def face_areas(self) -> np.ndarray:
        """Area of every triangle."""
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def area(self) -> float:
        """Total surface area."""
        return float(self.face_areas().sum())

    def halfedges(self) -> np.ndarray:
        """(3F, 2) directed edges, one per face corner."""
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    def edge_face_counts(self):
        """Undirected unique edges and the number of faces incident to each."""
        he = np.sort(self.halfedges(), axis=1)
        edges, counts = np.unique(he, axis=0, return_counts=True)
        return edges, counts

    def euler_characteristic(self) -> int:
        edges, _ = self.edge_face_counts()
        return self.n_vertices - len(edges) + self.n_faces

    def with_vertices(self, vertices) -> "TriMesh":
        """Same connectivity, new positions."""
        return TriMesh(vertices, self.faces)

    def __repr__(self):
        return f"TriMesh(n_vertices={self.n_vertices}, n_faces={self.n_faces})"


@dataclass(frozen=True)
class ValidationReport:
    components: int
    degenerate_faces: int
    boundary_edges: int
    nonmanifold_edges: int

    @property
    def ok_for_detection(self) -> bool:
        return self.components == 1 and self.degenerate_faces == 0


@dataclass(frozen=True)
class CotanWeights:
    """Symmetric sparse cotangent edge weights with a zero diagonal.

    ``negative_edges`` counts undirected edges whose total weight came out
    negative (obtuse configurations); they are kept, not clamped.
    """

    w: sparse.csr_matrix
    negative_edges: int

    def degrees(self) -> np.ndarray:
        """d_ii = sum_j w_ij."""
        return np.asarray(self.w.sum(axis=1)).ravel()


def vertex_adjacency(mesh: TriMesh) -> sparse.csr_matrix:
    """Binary symmetric vertex adjacency from the face list."""
    he = mesh.halfedges()
    n = mesh.n_vertices
    data = np.ones(len(he), dtype=np.int8)
    adj = sparse.csr_matrix((data, (he[:, 0], he[:, 1])), shape=(n, n))
    adj = adj + adj.T
    adj.data[:] = 1
    return adj


def validate_mesh(mesh: TriMesh) -> ValidationReport:
    """Report connectivity, degeneracy and manifoldness. Never raises."""
    if mesh.n_faces == 0:
        return ValidationReport(mesh.n_vertices, 0, 0, 0)
    n_comp = csgraph.connected_components(
        vertex_adjacency(mesh), directed=False, return_labels=False
    )
    areas = mesh.face_areas()
    degenerate = int((areas <= DEGENERATE_REL_AREA * areas.mean()).sum())
    _, counts = mesh.edge_face_counts()
    return ValidationReport(
        components=int(n_comp),
        degenerate_faces=degenerate,
        boundary_edges=int((counts == 1).sum()),
        nonmanifold_edges=int((counts > 2).sum()),
    )


def normalize_area(mesh: TriMesh) -> TriMesh:
    """Uniformly scale to unit surface area and move the area centroid to 0.

    Idempotent up to floating point: applying twice equals applying once.
    """
    areas = mesh.face_areas()
    total = areas.sum()
    if total <= 0:
        raise ZeroArea("mesh has zero total area")
    corners = mesh.vertices[mesh.faces]
    centroid = (corners.mean(axis=1) * areas[:, None]).sum(axis=0) / total
    scale = 1.0 / np.sqrt(total)
    return mesh.with_vertices((mesh.vertices - centroid) * scale)


def vertex_masses(mesh: TriMesh) -> np.ndarray:
    """Lumped (barycentric) vertex areas: a third of each incident face area.

    The entries are positive and sum to the total surface area.
    """
    areas = mesh.face_areas()
    masses = np.zeros(mesh.n_vertices)
    third = areas / 3.0
    for k in range(3):
        np.add.at(masses, mesh.faces[:, k], third)
    return masses


def cotan_weights(mesh: TriMesh) -> CotanWeights:
    """Half-cotangent edge weights w_ij = (cot a_ij + cot b_ij) / 2.

    Boundary edges get a single cotangent term. Negative weights from obtuse
    triangles are kept and counted.
    """
    v, f = mesh.vertices, mesh.faces
    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    # corner k is opposite the edge (k+1, k+2)
    for k in range(3):
        i = f[:, (k + 1) % 3]
        j = f[:, (k + 2) % 3]
        p = v[f[:, k]]
        u = v[i] - p
        w = v[j] - p
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        cot = np.einsum("ij,ij->i", u, w) / np.maximum(cross, 1e-300)
        rows.append(i)
        cols.append(j)
        vals.append(0.5 * cot)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    w = sparse.csr_matrix(
        (np.concatenate([vals, vals]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    )
    w.sum_duplicates()
    upper = sparse.triu(w, k=1)
    negative = int((upper.data < 0).sum())
    return CotanWeights(w=w, negative_edges=negative)


# ---------------------------------------------------------------------------
# file I/O


def _strip_lines(text: str):
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


def _drop_unreferenced(vertices: np.ndarray, faces: np.ndarray) -> TriMesh:
    used = np.zeros(len(vertices), dtype=bool)
    used[faces.ravel()] = True
    n_dropped = int((~used).sum())
    if n_dropped:
        warnings.warn(
            f"dropped {n_dropped} unreferenced vertices", MeshLoadWarning, stacklevel=3
        )
        remap = np.cumsum(used) - 1
        vertices = vertices[used]
        faces = remap[faces]
    return TriMesh(vertices, faces)


def _check_face_areas(mesh: TriMesh):
    if mesh.n_faces == 0:
        return
    areas = mesh.face_areas()
    floor = DEGENERATE_REL_AREA * areas.mean()
    if (areas <= floor).any():
        bad = int(np.argmax(areas <= floor))
        raise DegenerateFace(f"face {bad} has (near-)zero area")


def _parse_off(text: str) -> TriMesh:
    lines = list(_strip_lines(text))
    if not lines or lines[0] != "OFF":
        raise ParseError("missing OFF header")
    try:
        n_v, n_f = [int(x) for x in lines[1].split()[:2]]
    except (IndexError, ValueError) as e:
        raise ParseError("malformed OFF counts line") from e
    if len(lines) < 2 + n_v + n_f:
        raise ParseError("truncated OFF file")
    try:
        verts = np.array(
            [[float(x) for x in lines[2 + i].split()[:3]] for i in range(n_v)]
        )
    except ValueError as e:
        raise ParseError("malformed OFF vertex line") from e
    faces = []
    for i in range(n_f):
        parts = lines[2 + n_v + i].split()
        try:
            cnt = int(parts[0])
            idx = [int(x) for x in parts[1 : 1 + cnt]]
        except (IndexError, ValueError) as e:
            raise ParseError("malformed OFF face line") from e
        if cnt != 3 or len(idx) != 3:
            raise NonTriangleFace(f"OFF face with {cnt} vertices")
        faces.append(idx)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if n_f and (faces.min() < 0 or faces.max() >= n_v):
        raise ParseError("OFF face index out of range")
    mesh = _drop_unreferenced(verts.reshape(-1, 3), faces)
    _check_face_areas(mesh)
    return mesh


def _parse_obj(text: str) -> TriMesh:
    verts, faces = [], []
    for line in _strip_lines(text):
        parts = line.split()
        if parts[0] == "v":
            try:
                verts.append([float(x) for x in parts[1:4]])
            except (IndexError, ValueError) as e:
                raise ParseError("malformed OBJ vertex line") from e
        elif parts[0] == "f":
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError as e:
                    raise ParseError(f"malformed OBJ face token {token!r}") from e
                if i <= 0:
                    raise ParseError("OBJ indices must be positive (1-based)")
                idx.append(i - 1)
            if len(idx) < 3:
                raise NonTriangleFace("OBJ face with fewer than 3 vertices")
            for k in range(1, len(idx) - 1):  # fan triangulation
                faces.append([idx[0], idx[k], idx[k + 1]])
    verts = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) and (faces.min() < 0 or faces.max() >= len(verts)):
        raise ParseError("OBJ face index out of range")
    mesh = _drop_unreferenced(verts, faces)
    _check_face_areas(mesh)
    return mesh


def load_mesh(data, fmt: str) -> TriMesh:
    """Parse OFF or OBJ mesh data (bytes or str).

    Unreferenced vertices are dropped with a ``MeshLoadWarning``; degenerate
    and non-triangle faces are rejected.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    fmt = fmt.lower()
    if fmt == "off":
        return _parse_off(data)
    if fmt == "obj":
        return _parse_obj(data)
    raise ParseError(f"unknown mesh format {fmt!r}")


def load_mesh_file(path) -> TriMesh:
    path = str(path)
    fmt = path.rsplit(".", 1)[-1].lower()
    with open(path, "rb") as f:
        return load_mesh(f.read(), fmt)


def save_off(mesh: TriMesh) -> bytes:
    buf = io.StringIO()
    buf.write("OFF\n")
    buf.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
    for p in mesh.vertices:
        buf.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
    for f in mesh.faces:
        buf.write(f"3 {f[0]} {f[1]} {f[2]}\n")
    return buf.getvalue().encode()


def save_obj(mesh: TriMesh) -> bytes:
    buf = io.StringIO()
    for p in mesh.vertices:
        buf.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
    for f in mesh.faces:
        buf.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
    return buf.getvalue().encode()


def save_ply(mesh: TriMesh, vertex_colors: np.ndarray | None = None) -> bytes:
    """ASCII PLY, optionally with per-vertex uchar RGB colors."""
    buf = io.StringIO()
    buf.write("ply\nformat ascii 1.0\n")
    buf.write(f"element vertex {mesh.n_vertices}\n")
    buf.write("property float x\nproperty float y\nproperty float z\n")
    if vertex_colors is not None:
        vertex_colors = np.asarray(vertex_colors, dtype=np.uint8)
        buf.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
    buf.write(f"element face {mesh.n_faces}\n")
    buf.write("property list uchar int vertex_indices\nend_header\n")
    for i, p in enumerate(mesh.vertices):
        buf.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}")
        if vertex_colors is not None:
            c = vertex_colors[i]
            buf.write(f" {c[0]} {c[1]} {c[2]}")
        buf.write("\n")
    for f in mesh.faces:
        buf.write(f"3 {f[0]} {f[1]} {f[2]}\n")
    return buf.getvalue().encode()


def save_mesh_file(mesh: TriMesh, path):
    path = str(path)
    fmt = path.rsplit(".", 1)[-1].lower()
    if fmt == "off":
        data = save_off(mesh)
    elif fmt == "obj":
        data = save_obj(mesh)
    elif fmt == "ply":
        data = save_ply(mesh)
    else:
        raise ParseError(f"unknown mesh format {fmt!r}")
    with open(path, "wb") as f:
        f.write(data)
