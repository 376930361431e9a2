"""Density-operator families built from the subsystem eigenvectors.

Notation used throughout:

* non-Hermitian basis ("nH"): ket-bra ``|v_i><v_j*| = v_i v_j^T``
* Hermitian basis ("H"):      ket-bra ``|v_i><v_j|  = v_i v_j^H``
* mixed:    sum of ket-bras ``|v_i><v_i^(*)|`` over the index set
* reduced:  rank-1 ``(sum_i |v_i>)(sum_i <v_i^(*)|)`` over the index set

Index sets are 1-based, in the canonical eigen-ordering of the chosen
subsystem.  Presets: ``all`` (1), ``bulk`` (2, outside the nullspace),
``NLS`` (3, the nullspace), and ranges ``a-b``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from . import linalg
from .model import BipartiteModel, nls_positions, subsystem_eigensystem


class BadSpecString(ValueError):
    pass


class IndexOutOfRange(ValueError):
    pass


class IndexNotInNLS(ValueError):
    pass


class ZeroDenominator(ZeroDivisionError):
    pass


class Basis(enum.Enum):
    NON_HERMITIAN = "nH"
    HERMITIAN = "H"


class Kind(enum.Enum):
    MIXED = "mixed"
    REDUCED = "reduced"


PRESETS = {"1": "all", "all": "all", "2": "bulk", "bulk": "bulk",
           "3": "NLS", "nls": "NLS"}


@dataclass(frozen=True)
class DensitySpec:
    basis: Basis
    kind: Kind
    indices: str | tuple[int, ...] = "all"
    subsystem: int = 1

    @classmethod
    def parse(cls, text: str) -> "DensitySpec":
        """Parse ``basis:kind:indices[:a<subsystem>]``, e.g. ``nH:mixed:NLS``."""
        parts = text.strip().split(":")
        if len(parts) not in (3, 4):
            raise BadSpecString(f"expected basis:kind:indices, got {text!r}")
        basis_s, kind_s, idx_s = parts[:3]
        try:
            basis = {"nh": Basis.NON_HERMITIAN, "h": Basis.HERMITIAN}[basis_s.lower()]
            kind = {"mixed": Kind.MIXED, "reduced": Kind.REDUCED}[kind_s.lower()]
        except KeyError:
            raise BadSpecString(f"unknown basis or kind in {text!r}") from None
        sub = 1
        if len(parts) == 4:
            m = re.fullmatch(r"a?([12])", parts[3])
            if not m:
                raise BadSpecString(f"bad subsystem tag in {text!r}")
            sub = int(m.group(1))
        return cls(basis, kind, _parse_indices(idx_s), sub)

    def __str__(self) -> str:
        idx = self.indices if isinstance(self.indices, str) else ",".join(map(str, self.indices))
        return f"{self.basis.value}:{self.kind.value}:{idx}:a{self.subsystem}"


def _parse_indices(text: str):
    t = text.strip()
    if not t:
        raise BadSpecString("empty index set")
    if t.lower() in PRESETS:
        return PRESETS[t.lower()]
    out: list[int] = []
    for tok in t.split(","):
        m = re.fullmatch(r"\s*(\d+)\s*(?:-\s*(\d+))?\s*", tok)
        if not m:
            raise BadSpecString(f"bad index token {tok!r}")
        a = int(m.group(1))
        b = int(m.group(2)) if m.group(2) else a
        if b < a:
            raise BadSpecString(f"descending range {tok!r}")
        out.extend(range(a, b + 1))
    if len(set(out)) != len(out):
        raise BadSpecString("duplicate indices")
    return tuple(out)


def resolve_indices(model: BipartiteModel, spec_indices, subsystem: int = 1) -> np.ndarray:
    """0-based eigenvector positions for a preset name or explicit 1-based tuple."""
    D = model.D
    nls = nls_positions(model, subsystem)
    if isinstance(spec_indices, str):
        name = PRESETS.get(spec_indices.lower(), spec_indices)
        if name == "all":
            return np.arange(D)
        if name == "NLS":
            return nls
        if name == "bulk":
            return np.setdiff1d(np.arange(D), nls)
        raise BadSpecString(f"unknown preset {spec_indices!r}")
    idx = np.asarray(spec_indices, int)
    if idx.size == 0:
        raise BadSpecString("empty index set")
    if np.any(idx < 1) or np.any(idx > D):
        raise IndexOutOfRange(f"indices must lie in 1..{D}")
    if np.unique(idx).size != idx.size:
        raise BadSpecString("duplicate indices")
    return idx - 1


@dataclass(frozen=True, eq=False)
class DensityOperator:
    spec: DensitySpec
    mat: np.ndarray
    positions: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    @property
    def norm2(self) -> float:
        return float(np.linalg.norm(self.mat, 2))

    @property
    def rank(self) -> int:
        return linalg.rank_tol(self.mat)


def ket_bra(v, w, basis: Basis) -> np.ndarray:
    if basis is Basis.HERMITIAN:
        return np.outer(v, w.conj())
    return np.outer(v, w)


def make_density(model: BipartiteModel, spec: DensitySpec | str) -> DensityOperator:
    if isinstance(spec, str):
        spec = DensitySpec.parse(spec)
    pos = resolve_indices(model, spec.indices, spec.subsystem)
    V = subsystem_eigensystem(model, spec.subsystem).right[:, pos]
    if spec.kind is Kind.MIXED:
        W = V.conj() if spec.basis is Basis.HERMITIAN else V
        mat = V @ W.T
    else:
        s = V.sum(axis=1)
        mat = ket_bra(s, s, spec.basis)
    return DensityOperator(spec, mat, pos)


def diagonal_vector(rho) -> np.ndarray:
    return np.diag(np.asarray(getattr(rho, "mat", rho))).copy()


def coherence_ratio(rho_a, rho_b) -> complex:
    """[(1/D)Tr a · (1/D)Tr b] / [(1/D) V_d(a)·conj(V_d(b))]."""
    A = np.asarray(getattr(rho_a, "mat", rho_a))
    B = np.asarray(getattr(rho_b, "mat", rho_b))
    if A.shape != B.shape:
        raise linalg.DimMismatch("densities differ in dimension")
    D = A.shape[0]
    den = np.dot(np.diag(A), np.diag(B).conj()) / D
    if abs(den) < 1e-300:
        raise ZeroDenominator("diagonal vectors are orthogonal")
    return complex((np.trace(A) / D) * (np.trace(B) / D) / den)


@dataclass(frozen=True)
class OverlapTable:
    eigenvalues: np.ndarray
    overlaps: np.ndarray  # (1/D)|<rho_j|g>|^2 per eigenvector
    threshold: float
    nonthermal: np.ndarray

    @property
    def log_threshold(self) -> float:
        return float(np.log(self.threshold))

    @property
    def nonthermal_count(self) -> int:
        return int(np.sum(self.nonthermal))


def _aligned_eigenvectors(A, g, tol=1e-9):
    """Eigen-decomposition where each degenerate eigenspace is rotated so that a
    single basis vector carries the whole projection of ``g``.

    Returns values and unit eigenvectors (columns).
    """
    es = linalg.eig_general(A)
    vals, V = es.values, es.right.copy()
    scale = max(np.linalg.norm(A, 2), 1.0)
    for idx in linalg.eigen_clusters(vals, tol * scale):
        if idx.size < 2:
            continue
        Q, _ = np.linalg.qr(V[:, idx])
        p = Q @ (Q.conj().T @ g)
        if np.linalg.norm(p) < 1e-14:
            V[:, idx] = Q
            continue
        p = p / np.linalg.norm(p)
        rest = Q - np.outer(p, p.conj() @ Q)
        U, _, _ = np.linalg.svd(rest, full_matrices=False)
        V[:, idx] = np.column_stack([p, U[:, : idx.size - 1]])
    return vals, V


def ground_overlaps(rho, model: BipartiteModel, g=None) -> OverlapTable:
    """Overlap of every density eigenvector with the ground state ``g``.

    An eigenvector is nonthermal when ``(1/D)|<rho_j|g>|^2 >= 1/D``.  Inside
    a degenerate eigenspace the eigenvector along the projection of ``g`` is
    used, its orthogonal partners then carry zero overlap.
    """
    from .model import ground_state

    A = np.asarray(getattr(rho, "mat", rho), complex)
    if A.ndim == 1:
        A = np.outer(A, A.conj())
    D = model.D
    if g is None:
        g = ground_state(model)
    vals, V = _aligned_eigenvectors(A, g)
    ov = np.abs(V.conj().T @ g) ** 2 / D
    thr = 1.0 / D
    return OverlapTable(vals, ov, thr, ov >= thr * (1 - 1e-12))


def state_overlaps(model: BipartiteModel, g=None) -> np.ndarray:
    """(1/D)<Psi_i|g> for each canonical eigenvector of Psi_1."""
    from .model import ground_state

    if g is None:
        g = ground_state(model)
    V = subsystem_eigensystem(model, 1).right
    return (V.conj().T @ g) / model.D


def biortho_table(model: BipartiteModel, subsystem: int = 1) -> dict:
    """Region sums of eigenvector overlaps.

    ``conj`` sums use the sesquilinear product <v_i|v_j>, ``plain`` sums use
    the bilinear product v_i^T v_j.  Keys are (region_i, region_j, product).
    """
    V = subsystem_eigensystem(model, subsystem).right
    nls = nls_positions(model, subsystem)
    bulk = np.setdiff1d(np.arange(model.D), nls)
    herm = V.conj().T @ V
    bil = V.T @ V
    regions = {"bulk": bulk, "NLS": nls}
    out = {}
    for ra, ia in regions.items():
        for rb, ib in regions.items():
            out[(ra, rb, "conj")] = complex(herm[np.ix_(ia, ib)].sum())
            out[(ra, rb, "plain")] = complex(bil[np.ix_(ia, ib)].sum())
    return out


@dataclass(frozen=True)
class QOperators:
    Q_ij: np.ndarray
    Q_ji: np.ndarray
    trace_diff: complex
    rank_diff: int
    trace_diff_sq: complex
    maps_i_to_minus_j: float
    square_maps_i_to_minus_i: float


def q_operators(model: BipartiteModel, i: int, j: int) -> QOperators:
    """Q_ij = |v_i><v_j*| for two distinct 1-based nullspace indices."""
    nls = set((nls_positions(model, 1) + 1).tolist())
    if i == j or i not in nls or j not in nls:
        raise IndexNotInNLS(f"need distinct indices in {sorted(nls)}, got {i}, {j}")
    V = subsystem_eigensystem(model, 1).right
    vi, vj = V[:, i - 1], V[:, j - 1]
    Qij = np.outer(vi, vj)
    Qji = np.outer(vj, vi)
    K = Qij - Qji
    return QOperators(
        Qij, Qji,
        complex(np.trace(K)),
        linalg.rank_tol(K),
        complex(np.trace(K @ K)),
        float(np.linalg.norm(K @ vi + vj)),
        float(np.linalg.norm(K @ K @ vi + vi)),
    )


def describe(model: BipartiteModel, spec: DensitySpec | str, partner=None) -> dict:
    rho = make_density(model, spec)
    table = ground_overlaps(rho, model)
    rec = {
        "spec": str(rho.spec),
        "trace": [rho.trace.real, rho.trace.imag],
        "rank": rho.rank,
        "norm2": rho.norm2,
        "nonthermal_count": table.nonthermal_count,
        "log_threshold": table.log_threshold,
    }
    if partner is not None:
        other = make_density(model, partner)
        c = coherence_ratio(rho, other)
        rec["coherence_ratio"] = [c.real, c.imag]
        rec["partner"] = str(other.spec)
    return rec
