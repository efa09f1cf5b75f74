"""Evaluation metrics: correspondence rate, mesh rate and stage timings.

Geodesic distances are shortest paths over the edge graph with Euclidean
edge lengths (Dijkstra). The graph approximation overestimates smooth
geodesics by well under the coarse acceptance threshold sqrt(area/20), so
verdicts are unaffected.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DisconnectedMesh, EmptyGroundTruth, EmptyInput
from .fmap import PointMap
from .mesh import TriMesh


@dataclass(frozen=True)
class GeodesicField:
    source: int
    distances: np.ndarray


def edge_graph(mesh: TriMesh) -> sparse.csr_matrix:
    """Sparse symmetric matrix of Euclidean edge lengths."""
    edges, _ = mesh.edge_face_counts()
    lengths = np.linalg.norm(
        mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1
    )
    n = mesh.n_vertices
    g = sparse.csr_matrix(
        (
            np.concatenate([lengths, lengths]),
            (
                np.concatenate([edges[:, 0], edges[:, 1]]),
                np.concatenate([edges[:, 1], edges[:, 0]]),
            ),
        ),
        shape=(n, n),
    )
    return g


def geodesic_from(mesh: TriMesh, source: int, graph=None) -> GeodesicField:
    """Single-source shortest-path distances over the mesh edge graph."""
    if graph is None:
        graph = edge_graph(mesh)
    d = csgraph.dijkstra(graph, directed=False, indices=source)
    if np.isinf(d).any():
        raise DisconnectedMesh("mesh edge graph is not connected")
    return GeodesicField(source=source, distances=d)


def _gt_pairs(gt) -> np.ndarray:
    """Normalize ground truth (PointMap or (m, 2) pair array) to valid pairs."""
    if isinstance(gt, PointMap):
        src = np.arange(len(gt))
        dst = gt.target
    else:
        arr = np.asarray(gt, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise EmptyGroundTruth("ground truth must be a PointMap or (m, 2) pairs")
        src, dst = arr[:, 0], arr[:, 1]
    keep = dst >= 0
    pairs = np.stack([src[keep], dst[keep]], axis=1)
    if len(pairs) == 0:
        raise EmptyGroundTruth("no valid ground-truth pairs")
    return pairs


def correspondence_threshold(mesh: TriMesh) -> float:
    return float(np.sqrt(mesh.area() / 20.0))


def correspondence_rate(mesh: TriMesh, predicted: PointMap, gt,
                        threshold: float | None = None) -> float:
    """Fraction of ground-truth pairs (m, m') with d_g(m', T(m)) under threshold.

    Geodesic fields are computed once per distinct true target m' and reused.
    """
    pairs = _gt_pairs(gt)
    if threshold is None:
        threshold = correspondence_threshold(mesh)
    graph = edge_graph(mesh)
    targets = np.unique(pairs[:, 1])
    dmat = csgraph.dijkstra(graph, directed=False, indices=targets)
    if np.isinf(dmat).any():
        raise DisconnectedMesh("mesh edge graph is not connected")
    row_of = {int(v): r for r, v in enumerate(targets)}
    pred = predicted.target[pairs[:, 0]]
    hits = 0
    for (src, dst), p in zip(pairs, pred):
        if dmat[row_of[int(dst)], p] < threshold:
            hits += 1
    return hits / len(pairs)


def mesh_rate(rates, beta: float = 0.75) -> float:
    """Fraction of shapes whose correspondence rate reaches beta."""
    rates = np.asarray(list(rates), dtype=np.float64)
    if rates.size == 0:
        raise EmptyInput("no rates given")
    return float((rates >= beta).mean())


@dataclass
class EvalReport:
    per_shape: list = field(default_factory=list)
    beta: float = 0.75

    @property
    def rates(self):
        return [s["rate"] for s in self.per_shape]

    @property
    def mean_rate(self) -> float:
        return float(np.mean(self.rates)) if self.per_shape else 0.0

    @property
    def mesh_rate(self) -> float:
        return mesh_rate(self.rates, self.beta)

    def to_dict(self) -> dict:
        return {
            "mean_correspondence_rate": self.mean_rate,
            "mesh_rate": self.mesh_rate,
            "beta": self.beta,
            "shapes": self.per_shape,
        }

    def to_csv(self) -> str:
        lines = ["shape,rate_percent,above_beta,seconds"]
        for s in self.per_shape:
            lines.append(
                f"{s['name']},{100 * s['rate']:.1f},{int(s['rate'] >= self.beta)},{s.get('seconds', float('nan')):.3f}"
            )
        lines.append(f"mean,{100 * self.mean_rate:.1f},{100 * self.mesh_rate:.1f},")
        return "\n".join(lines) + "\n"


@dataclass
class StageTimings:
    eigensolve: float
    inference: float
    refinement: float

    @property
    def total(self) -> float:
        return self.eigensolve + self.inference + self.refinement

    def to_dict(self) -> dict:
        return {
            "eigensolve_s": self.eigensolve,
            "inference_s": self.inference,
            "refinement_s": self.refinement,
            "total_s": self.total,
        }


def bench_detect(mesh: TriMesh, params, k: int = 12, t: int = 3, pad: int = 4500,
                 iters: int = 10, runs: int = 5, seed: int = 0) -> StageTimings:
    """Median per-stage wall time over ``runs`` passes after one warm-up.

    Stages are reported separately: eigensolve, sign inference, and map
    assembly plus refinement (using a precomputed basis, as the cached-basis
    path would).
    """
    from .fmap import fmap_to_pointmap, refine_spectral_icp, signs_to_fmap
    from .signnet import predict_signs
    from .spectral import compute_basis, group_repeated

    eig_t, inf_t, ref_t = [], [], []
    basis = None
    for r in range(runs + 1):
        t0 = time.perf_counter()
        basis = compute_basis(mesh, k, seed=seed)
        t1 = time.perf_counter()
        groups = group_repeated(basis)
        signs = predict_signs(params, basis, t, groups, pad=pad, seed=seed)
        t2 = time.perf_counter()
        c0 = signs_to_fmap(signs, groups)
        c, pm = refine_spectral_icp(c0, basis, max_iters=iters)
        t3 = time.perf_counter()
        if r == 0:
            continue  # warm-up
        eig_t.append(t1 - t0)
        inf_t.append(t2 - t1)
        ref_t.append(t3 - t2)
    return StageTimings(
        eigensolve=float(np.median(eig_t)),
        inference=float(np.median(inf_t)),
        refinement=float(np.median(ref_t)),
    )
