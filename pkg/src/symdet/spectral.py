"""Laplacian eigenproblem assembly and the truncated spectral basis.

The generalized problem solved here is ``S phi = lam A phi`` with the
half-cotangent stiffness ``S = D - W`` and the lumped vertex-area mass ``A``.
The trivial constant pair (lam ~ 0) is dropped; the returned eigenfunctions
are A-orthonormal with ascending eigenvalues.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConvergenceFailure, DisconnectedMesh, FormatError
from .mesh import TriMesh, cotan_weights, vertex_masses

# eigenvalues below this are treated as the trivial constant mode
ZERO_EIG_TOL = 1e-8
# shift regularization: factor S + delta * A instead of the singular S
SHIFT_DELTA = 1e-8
# meshes at or below this size use a dense generalized solve
DENSE_CUTOFF = 300

RESIDUAL_RTOL = 1e-6


@dataclass(frozen=True)
class SpectralBasis:
    """K smallest non-trivial eigenpairs of the mesh Laplacian.

    ``phi`` is (N, K) with A-orthonormal columns; ``eigenvalues`` ascending.
    """

    eigenvalues: np.ndarray
    phi: np.ndarray
    masses: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.phi.shape[0]

    @property
    def k(self) -> int:
        return self.phi.shape[1]

    def gram(self) -> np.ndarray:
        """Phi^T A Phi; identity up to solver tolerance."""
        return self.phi.T @ (self.masses[:, None] * self.phi)


@dataclass(frozen=True)
class EigGroups:
    """Partition of eigenvalue indices into maximal near-equal runs."""

    groups: tuple

    def singleton_mask(self) -> np.ndarray:
        k = sum(len(g) for g in self.groups)
        mask = np.zeros(k, dtype=bool)
        for g in self.groups:
            if len(g) == 1:
                mask[g[0]] = True
        return mask

    def sizes(self) -> list:
        return [len(g) for g in self.groups]


def assemble(mesh: TriMesh):
    """Stiffness S = D - W (sparse, PSD, S @ 1 = 0) and vertex masses."""
    cw = cotan_weights(mesh)
    w = cw.w
    d = np.asarray(w.sum(axis=1)).ravel()
    s = sparse.diags(d) - w
    return s.tocsr(), vertex_masses(mesh)


def _canonical_signs(phi: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(phi), axis=0)
    flip = phi[idx, np.arange(phi.shape[1])] < 0
    out = phi.copy()
    out[:, flip] *= -1.0
    return out


def smallest_eigenpairs(s, masses: np.ndarray, k: int, seed: int = 0) -> SpectralBasis:
    """K smallest non-trivial eigenpairs of ``S phi = lam A phi``.

    Deterministic for fixed inputs and seed: the Lanczos starting vector is
    drawn from ``seed`` and ARPACK runs to machine-precision tolerance. Small
    problems fall back to a dense generalized solve.
    """
    n = s.shape[0]
    if k + 1 > n:
        raise ConvergenceFailure(f"need K+1={k + 1} <= N={n}")
    if n <= DENSE_CUTOFF:
        a_dense = sparse.csr_matrix(s).toarray()
        lam, vec = scipy.linalg.eigh(
            a_dense, np.diag(masses), subset_by_index=[0, k]
        )
    else:
        m = sparse.diags(masses).tocsc()
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        try:
            lam, vec = eigsh(
                sparse.csc_matrix(s),
                k=k + 1,
                M=m,
                sigma=-SHIFT_DELTA,
                which="LM",
                v0=v0,
                tol=0,
                maxiter=max(1000, 50 * (k + 1)),
            )
        except ArpackNoConvergence as e:
            raise ConvergenceFailure(str(e)) from e
    order = np.argsort(lam)
    lam = lam[order]
    vec = vec[:, order]
    if abs(lam[0]) > ZERO_EIG_TOL * max(1.0, abs(lam[k])):
        raise ConvergenceFailure(
            f"trivial eigenvalue not found (lam0={lam[0]:.3e})"
        )
    if lam[1] < ZERO_EIG_TOL:
        raise DisconnectedMesh(
            f"second eigenvalue {lam[1]:.3e} below zero threshold; mesh disconnected"
        )
    lam = lam[1:]
    phi = vec[:, 1:]
    # exact unit A-norm, canonical column signs
    norms = np.sqrt(np.einsum("ij,ij->j", phi, masses[:, None] * phi))
    phi = phi / norms
    phi = _canonical_signs(phi)
    _check_residuals(s, masses, lam, phi)
    lam.setflags(write=False)
    phi.setflags(write=False)
    return SpectralBasis(eigenvalues=lam, phi=phi, masses=masses)


def _check_residuals(s, masses, lam, phi):
    aphi = masses[:, None] * phi
    res = s @ phi - aphi * lam[None, :]
    res_norm = np.linalg.norm(res, axis=0)
    bound = RESIDUAL_RTOL * np.linalg.norm(aphi, axis=0) * np.maximum(1.0, lam)
    if (res_norm > bound).any():
        worst = int(np.argmax(res_norm / bound))
        raise ConvergenceFailure(
            f"eigen residual {res_norm[worst]:.3e} exceeds bound {bound[worst]:.3e}"
        )


def compute_basis(mesh: TriMesh, k: int, seed: int = 0) -> SpectralBasis:
    """Convenience: assemble + solve on an (already normalized) mesh."""
    s, masses = assemble(mesh)
    return smallest_eigenpairs(s, masses, k, seed=seed)


def group_repeated(basis: SpectralBasis, rel_tol: float = 1e-2) -> EigGroups:
    """Group adjacent eigenvalues whose gap is within ``rel_tol`` relative."""
    lam = basis.eigenvalues
    groups = []
    cur = [0]
    for i in range(1, len(lam)):
        if lam[i] - lam[i - 1] <= rel_tol * max(lam[i], ZERO_EIG_TOL):
            cur.append(i)
        else:
            groups.append(tuple(cur))
            cur = [i]
    groups.append(tuple(cur))
    return EigGroups(groups=tuple(groups))


def spectral_embed(basis: SpectralBasis, t: int) -> np.ndarray:
    """Rows (phi_1(p), ..., phi_t(p)); the intrinsic embedding coordinates."""
    if t > basis.k:
        raise ValueError(f"t={t} exceeds basis size K={basis.k}")
    return basis.phi[:, :t].copy()


# ---------------------------------------------------------------------------
# binary cache (magic "SPB1"; little-endian; u32 N, u32 K; then
# eigenvalues, masses, and column-major Phi as f64)

_SPB_MAGIC = b"SPB1"


def basis_cache_key(mesh: TriMesh, k: int) -> str:
    h = hashlib.sha256()
    h.update(mesh.vertices.tobytes())
    h.update(mesh.faces.tobytes())
    h.update(struct.pack("<I", k))
    return h.hexdigest()


def save_basis(basis: SpectralBasis) -> bytes:
    parts = [
        _SPB_MAGIC,
        struct.pack("<II", basis.n_vertices, basis.k),
        basis.eigenvalues.astype("<f8").tobytes(),
        basis.masses.astype("<f8").tobytes(),
        np.asfortranarray(basis.phi.astype("<f8")).tobytes(order="F"),
    ]
    return b"".join(parts)


def load_basis(data: bytes) -> SpectralBasis:
    if len(data) < 12 or data[:4] != _SPB_MAGIC:
        raise FormatError("not an SPB1 blob")
    n, k = struct.unpack("<II", data[4:12])
    need = 12 + 8 * (k + n + n * k)
    if len(data) != need:
        raise FormatError(f"SPB1 blob has {len(data)} bytes, expected {need}")
    off = 12
    lam = np.frombuffer(data, dtype="<f8", count=k, offset=off).copy()
    off += 8 * k
    masses = np.frombuffer(data, dtype="<f8", count=n, offset=off).copy()
    off += 8 * n
    phi = (
        np.frombuffer(data, dtype="<f8", count=n * k, offset=off)
        .reshape((n, k), order="F")
        .copy()
    )
    lam.setflags(write=False)
    phi.setflags(write=False)
    masses.setflags(write=False)
    return SpectralBasis(eigenvalues=lam, phi=phi, masses=masses)
