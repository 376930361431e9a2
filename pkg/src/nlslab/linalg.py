"""Dense complex matrix kernels.

Everything here is a pure function of its inputs.  Matrix functions that
are standard numerical infrastructure (Padé expm, Schur-based logm, sqrtm)
are delegated to scipy; eigen-ordering, defectiveness flags, Takagi
factorization and the CSV matrix format live here.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla


class LinalgError(ValueError):
    """Base class for kernel failures."""


class NonConvergence(LinalgError):
    pass


class SingularInput(LinalgError):
    pass


class NotSymmetric(LinalgError):
    pass


class DimMismatch(LinalgError):
    pass


class Overflow(LinalgError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues with right (and optionally left) eigenvectors as columns."""

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray | None
    defective: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.right @ np.diag(self.values) @ np.linalg.inv(self.right)

    def log_magnitudes(self, floor: float = 1e-300) -> np.ndarray:
        return np.log10(np.maximum(np.abs(self.values), floor))


@dataclass(frozen=True)
class TakagiFactors:
    U: np.ndarray
    sigma: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.U.T


class HSProducts(NamedTuple):
    tr_AB: complex
    tr_AconjB: complex
    tr_AdagB: complex
    hs_norm_A: float


def as_square(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimMismatch(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise LinalgError(f"{name} has non-finite entries")
    return A


def canonical_order(values: np.ndarray, decimals: int = 12) -> np.ndarray:
    """Indices sorting by descending |λ|, then descending Re, then Im.

    Keys are rounded relative to the spectral scale so that rounding noise
    does not reshuffle exact ties between runs.
    """
    scale = max(float(np.max(np.abs(values))), 1.0) if values.size else 1.0
    mag = np.round(np.abs(values) / scale, decimals)
    re = np.round(values.real / scale, decimals)
    im = np.round(values.imag / scale, decimals)
    # lexsort uses the last key as primary
    return np.lexsort((-im, -re, -mag))


def eigen_clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group eigenvalue indices whose mutual distance chains within ``tol``."""
    n = values.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def eig_general(A, left: bool = False, cluster_tol: float | None = None,
                cond_limit: float = 1e8) -> EigenSystem:
    """Eigendecomposition of a general complex matrix in canonical order.

    Right eigenvectors are unit 2-norm columns.  A cluster of (numerically)
    equal eigenvalues is flagged defective when its eigenvector sub-block
    has condition number above ``cond_limit``.
    """
    A = as_square(A)
    n = A.shape[0]
    if n == 0:
        empty = np.zeros((0, 0), complex)
        return EigenSystem(np.zeros(0, complex), empty, empty if left else None,
                           np.zeros(0, bool))
    try:
        if left:
            w, vl, vr = sla.eig(A, left=True, right=True)
        else:
            w, vr = sla.eig(A)
            vl = None
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise NonConvergence("eigenvalue iteration produced non-finite values")

    order = canonical_order(w)
    w = w[order]
    vr = vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)
    if vl is not None:
        vl = vl[:, order]
        vl = vl / np.linalg.norm(vl, axis=0)

    if cluster_tol is None:
        cluster_tol = np.sqrt(np.finfo(float).eps) * max(np.linalg.norm(A, 2), 1.0)
    defective = np.zeros(n, bool)
    for idx in eigen_clusters(w, cluster_tol):
        if idx.size > 1:
            s = np.linalg.svd(vr[:, idx], compute_uv=False)
            if s[-1] == 0 or s[0] / s[-1] > cond_limit:
                defective[idx] = True
    return EigenSystem(w, vr, vl, defective)


def gauge_fix(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    V = np.array(vectors, dtype=complex)
    for k in range(V.shape[1]):
        col = V[:, k]
        # first index among near-maximal entries, so ties resolve stably
        mags = np.abs(col)
        j = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-9))[0])
        if mags[j] > 0:
            V[:, k] = col * (abs(col[j]) / col[j])
    return V


def expm(A) -> np.ndarray:
    A = as_square(A)
    with np.errstate(over="ignore", invalid="ignore"):
        out = sla.expm(A)
    if not np.all(np.isfinite(out)):
        raise Overflow("matrix exponential overflowed")
    return out


def logm_principal(A, eps: float = 1e-12) -> np.ndarray:
    """Principal matrix logarithm of ``A + eps·I``.

    With ``eps == 0`` a (numerically) singular input raises SingularInput.
    """
    A = as_square(A)
    n = A.shape[0]
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        smin = np.linalg.svd(A, compute_uv=False)[-1] if n else 1.0
        if smin <= np.finfo(float).eps * max(np.linalg.norm(A, 2), 1.0):
            raise SingularInput("matrix is singular; pass eps > 0 to regularize")
    B = A + eps * np.eye(n)
    if is_hermitian(A, 1e-14):
        # Hermitian path through eigh.  Eigenvalues at roundoff level are
        # snapped to zero first, otherwise their noise (~n·ulp·|A|) would
        # dominate log(w + eps) for small eps.
        w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
        noise = n * np.finfo(float).eps * max(np.max(np.abs(w)), 1.0)
        w = np.where(np.abs(w) <= noise, 0.0, w) + eps
        if np.min(w) > 0:
            return (V * np.log(w)) @ V.conj().T
    out = sla.logm(B, disp=False)[0]
    if not np.all(np.isfinite(out)):
        raise SingularInput("logarithm is not finite for this input")
    return np.asarray(out, dtype=complex)


def takagi(A, tol: float = 1e-10) -> TakagiFactors:
    """Takagi factorization A = U diag(sigma) U^T of a complex symmetric matrix.

    Built from the SVD A = W diag(s) V^H: symmetry forces conj(V) = W Z with
    a unitary Z commuting with diag(s), and U = W Z^{1/2}.
    """
    A = as_square(A)
    scale = max(np.linalg.norm(A), 1e-300)
    if np.linalg.norm(A - A.T) > tol * scale:
        raise NotSymmetric("input is not complex symmetric")
    W, s, Vh = np.linalg.svd(A)
    Z = W.conj().T @ Vh.T
    U = W @ sla.sqrtm(Z)
    return TakagiFactors(np.asarray(U, complex), s)


def singular_values(A) -> np.ndarray:
    return np.linalg.svd(np.asarray(A, complex), compute_uv=False)


def rank_tol(A, tol: float | None = None) -> int:
    """Number of singular values above ``tol`` (default 1e-10·σ_max)."""
    s = singular_values(A)
    if s.size == 0:
        return 0
    if tol is None:
        tol = 1e-10 * s[0]
    return int(np.sum(s > tol))


def nullity_tol(A, tol: float | None = None) -> int:
    s = singular_values(A)
    if s.size == 0:
        return 0
    if tol is None:
        tol = 1e-10 * s[0]
    return int(np.sum(s <= tol))


def hs_products(A, B) -> HSProducts:
    """Bilinear and sesquilinear trace products of two square matrices."""
    A = np.asarray(A, complex)
    B = np.asarray(B, complex)
    if A.shape != B.shape:
        raise DimMismatch(f"shape mismatch {A.shape} vs {B.shape}")
    # Tr[XY] = sum_ij X_ij Y_ji
    tr_AB = complex(np.sum(A * B.T))
    tr_AconjB = complex(np.sum(A.conj() * B.T))
    tr_AdagB = complex(np.sum(A.conj() * B))
    hs = float(np.sqrt(np.sum(np.abs(A) ** 2)))
    return HSProducts(tr_AB, tr_AconjB, tr_AdagB, hs)


def is_hermitian(A, tol: float = 1e-10) -> bool:
    A = np.asarray(A)
    return bool(np.linalg.norm(A - A.conj().T) <= tol * max(np.linalg.norm(A), 1.0))


# -- CSV matrix format -------------------------------------------------------

def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def dumps_matrix(A) -> str:
    A = np.asarray(A, complex)
    buf = io.StringIO()
    buf.write(f"dim={A.shape[0]}\n")
    for row in A:
        buf.write(",".join(format_complex(z) for z in row))
        buf.write("\n")
    return buf.getvalue()


def loads_matrix(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("dim="):
        raise ValueError("matrix CSV must start with a 'dim=D' header")
    D = int(lines[0][4:])
    rows = [[complex(tok) for tok in ln.split(",")] for ln in lines[1:]]
    A = np.array(rows, dtype=complex)
    if A.shape != (D, D):
        raise DimMismatch(f"header says dim={D} but body is {A.shape}")
    return A


def save_matrix(path, A) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_matrix(A))


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return loads_matrix(fh.read())
