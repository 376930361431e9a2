"""Bipartite eigenket construction.

Two subsystem matrices ``Psi_a = S_a S_a^T`` (bilinear, complex symmetric)
are assembled from eigenket matrices ``S_a``.  The first is rank deficient
with a closed-form nullspace living on the trailing ``D/2`` coordinates; the
second is full rank.  Both are normal, so each is diagonalized by a real
orthogonal frame, and both have unit bilinear trace.

Layout of the coordinates (0-based):

* head ``0 .. D/2-1``     free, filled by a Haar-random frame
* tail ``D/2 .. D-1``     structured: Psi_1 is ``1/D`` everywhere there, Psi_2
                          has ``1/D`` on the diagonal and ``(D-4)/D^2`` off it
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .ensembles import goe_matrix, haar_orthogonal, stream

ZERO_REL = 1e-8  # numerically-zero threshold, relative to max |lambda|
RESEED_LIMIT = 16

# stream keys for the model's independent random ingredients
KEY_HAMILTONIAN, KEY_FRAME1, KEY_SPEC1, KEY_FRAME2, KEY_SPEC2 = range(5)


class ResampleExhausted(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    D: int = 8
    lambda1: float = 1.0
    lambda2: float = -1.0
    seed: int = 0
    sigma: float | None = None
    alpha_m: int = 2

    def __post_init__(self):
        if not isinstance(self.D, (int, np.integer)) or self.D < 4 or self.D % 2:
            raise ConfigError(f"D must be an even integer >= 4, got {self.D!r}")
        if self.lambda1 == self.lambda2:
            raise ConfigError("lambda1 and lambda2 must differ")
        if self.alpha_m != 2:
            raise ConfigError("only the bipartite case alpha_m = 2 is supported")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigError("sigma must be positive")

    @property
    def d_nls(self) -> int:
        return self.D // 2 - 1

    @property
    def goe_sigma(self) -> float:
        return self.sigma if self.sigma is not None else 1.0 / np.sqrt(self.D)


@dataclass(frozen=True)
class NlsBasis:
    vectors: np.ndarray  # D x D_NLS, column j-1 is closed-form vector j
    block_dim: int

    @property
    def count(self) -> int:
        return self.vectors.shape[1]

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.T


def nls_eigenvectors(D: int) -> NlsBasis:
    """Closed-form nullspace vectors of the rank-deficient subsystem.

    Vector ``j`` (1-based, j = 1..D/2-1) lives on the last ``j+1``
    coordinates: ``j/sqrt(j(j+1))`` first, then ``-1/sqrt(j(j+1))`` repeated.
    """
    if D < 4 or D % 2:
        raise ConfigError(f"D must be even and >= 4, got {D}")
    n = D // 2 - 1
    V = np.zeros((D, n))
    for j in range(1, n + 1):
        norm = np.sqrt(j * (j + 1))
        V[D - j - 1, j - 1] = j / norm
        V[D - j:, j - 1] = -1.0 / norm
    return NlsBasis(V, D // 2)


def telescoping_sum(d_nls: int):
    """Sum of 1/(j(j+1)) for j = 1..d_nls as an exact fraction."""
    from fractions import Fraction

    return sum((Fraction(1, j * (j + 1)) for j in range(1, d_nls + 1)), Fraction(0))


def complement_basis(D: int) -> np.ndarray:
    """Orthonormal basis of head coordinates plus the uniform tail direction."""
    h = D // 2
    B = np.zeros((D, h + 1))
    B[:h, :h] = np.eye(h)
    B[h:, h] = 1.0 / np.sqrt(h)
    return B


def _constrained_spectrum(rng, weights, total, weighted, floor, avoid=()):
    """Random complex spectrum with fixed sum and fixed weighted sum.

    Draws ``x0`` and shifts it by ``c1 + c2·w`` so that ``sum(x) = total`` and
    ``sum(w·x) = weighted``.  Returns None when the draw lands too close to
    zero, to ``avoid`` values, or to a degeneracy.
    """
    m = weights.size
    x0 = (rng.uniform(0.5, 1.5, m) * np.exp(1j * rng.uniform(-np.pi / 2, np.pi / 2, m))) / m
    G = np.array([[m, weights.sum()], [weights.sum(), weights @ weights]])
    rhs = np.array([total - x0.sum(), weighted - weights @ x0])
    try:
        c1, c2 = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return None
    x = x0 + c1 + c2 * weights
    pts = np.concatenate([x, np.asarray(avoid, complex)])
    if np.min(np.abs(x)) < floor:
        return None
    gaps = np.abs(pts[:, None] - pts[None, :]) + np.eye(pts.size)
    if np.min(gaps) < floor:
        return None
    return x


def _spectrum_with_retries(seed, key, weights, total, weighted, floor, avoid=()):
    for attempt in range(RESEED_LIMIT):
        x = _constrained_spectrum(stream(seed, key, attempt), weights, total,
                                  weighted, floor, avoid)
        if x is not None:
            return x
    raise ResampleExhausted(f"no admissible spectrum after {RESEED_LIMIT} draws")


@dataclass(frozen=True, eq=False)
class BipartiteModel:
    cfg: ModelConfig
    H: np.ndarray
    energies: np.ndarray
    E: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    Psi1: np.ndarray
    Psi2: np.ndarray
    M: np.ndarray
    spectrum1: np.ndarray = field(repr=False)
    spectrum2: np.ndarray = field(repr=False)

    @property
    def D(self) -> int:
        return self.cfg.D

    @property
    def d_nls(self) -> int:
        return self.cfg.d_nls

    def S(self, which: int) -> np.ndarray:
        return {1: self.S1, 2: self.S2}[_alpha(which)]

    def Psi(self, which: int) -> np.ndarray:
        return {1: self.Psi1, 2: self.Psi2}[_alpha(which)]

    @cached_property
    def nls(self) -> NlsBasis:
        return nls_eigenvectors(self.D)

    @cached_property
    def eigensystems(self) -> dict:
        return {a: _canonical_eigensystem(self.Psi(a), self.nls) for a in (1, 2)}

    def J(self, which: int) -> np.ndarray:
        """J_a with S_a = E^T J_a^T."""
        return self.S(which).T @ self.E.T

    def JtJ(self, which: int) -> np.ndarray:
        return self.E @ self.Psi(which) @ self.E.T


def _alpha(which) -> int:
    a = int(str(which).lstrip("a"))
    if a not in (1, 2):
        raise ConfigError(f"subsystem must be 1 or 2, got {which!r}")
    return a


def build(cfg: ModelConfig) -> BipartiteModel:
    D, h = cfg.D, cfg.D // 2
    H = goe_matrix(D, cfg.goe_sigma, stream(cfg.seed, KEY_HAMILTONIAN))
    energies, E = np.linalg.eigh(H)
    E = np.real(linalg.gauge_fix(E))

    B = complement_basis(D)
    nls = nls_eigenvectors(D).vectors
    floor = 1e-2 / D
    tail_dir = np.zeros(D)
    tail_dir[h:] = 1.0 / np.sqrt(h)

    # Psi_1: rank D/2+1, tail block (1/D)·ones  <=>  sum lam·a^2 = 1/2
    W1 = B @ haar_orthogonal(h + 1, stream(cfg.seed, KEY_FRAME1))
    a1 = W1.T @ tail_dir
    lam = _spectrum_with_retries(cfg.seed, KEY_SPEC1, a1 ** 2, 1.0, 0.5, floor)
    S1 = np.zeros((D, D), complex)
    S1[:, : h + 1] = W1 * np.sqrt(lam)

    # Psi_2: nullspace directions get 4/D^2, the rest carries the tail constraint
    nls_value = 4.0 / D ** 2
    tau = (4.0 + D * (D - 4) / 2.0) / D ** 2
    W2 = B @ haar_orthogonal(h + 1, stream(cfg.seed, KEY_FRAME2))
    a2 = W2.T @ tail_dir
    mu = _spectrum_with_retries(cfg.seed, KEY_SPEC2, a2 ** 2,
                                1.0 - cfg.d_nls * nls_value, tau, floor,
                                avoid=[nls_value])
    S2 = np.zeros((D, D), complex)
    S2[:, : h + 1] = W2 * np.sqrt(mu)
    S2[:, h + 1:] = nls * np.sqrt(nls_value)

    Psi1 = _sym(S1 @ S1.T)
    Psi2 = _sym(S2 @ S2.T)
    M = cfg.lambda1 * (S1 @ S1.conj().T) + cfg.lambda2 * (S2 @ S2.conj().T)
    M = 0.5 * (M + M.conj().T)

    if linalg.rank_tol(Psi2) != D:
        raise ResampleExhausted("Psi_2 is not full rank")
    return BipartiteModel(cfg, H, energies, E, S1, S2, Psi1, Psi2, M, lam, mu)


def _sym(A):
    return 0.5 * (A + A.T)


def principal_angle_max(U, V) -> float:
    """Largest principal angle (radians) between column spans of U and V."""
    Qu, _ = np.linalg.qr(U)
    Qv, _ = np.linalg.qr(V)
    s = np.linalg.svd(Qu.conj().T @ Qv, compute_uv=False)
    return float(np.arccos(np.clip(np.min(s), -1.0, 1.0)))


def _canonical_eigensystem(Psi, nls: NlsBasis, angle_tol=1e-6) -> linalg.EigenSystem:
    """Eigensystem with gauge-fixed vectors and closed-form nullspace block.

    Any degenerate cluster whose eigenspace coincides with the closed-form
    span is re-expressed in that basis: inside a degenerate eigenspace the
    basis is a free choice and the closed form is the canonical one.  The
    closed-form vector ``j`` takes position ``D - j`` (0-based) within the
    cluster's slots, i.e. the cluster is listed with largest support first.
    """
    es = linalg.eig_general(Psi)
    V = linalg.gauge_fix(es.right)
    vals = es.values.copy()
    k = nls.count
    D = Psi.shape[0]
    tol = np.sqrt(np.finfo(float).eps) * max(np.linalg.norm(Psi, 2), 1.0)
    for idx in linalg.eigen_clusters(vals, tol):
        if idx.size != k:
            continue
        idx = np.sort(idx)
        if principal_angle_max(V[:, idx], nls.vectors) < angle_tol:
            N = nls.vectors[:, ::-1].astype(complex)
            V[:, idx] = N
            vals[idx] = np.einsum("ij,ik,kj->j", N, Psi, N)
    return linalg.EigenSystem(vals, V, None, es.defective)


def subsystem_eigensystem(model: BipartiteModel, which=1) -> linalg.EigenSystem:
    return model.eigensystems[_alpha(which)]


def nls_positions(model: BipartiteModel, which=1) -> np.ndarray:
    """0-based positions in the canonical eigensystem held by nullspace vectors."""
    es = subsystem_eigensystem(model, which)
    N = model.nls.vectors
    overlap = np.sum(np.abs(N.T @ es.right) ** 2, axis=0)
    return np.flatnonzero(overlap > 1 - 1e-9)


def zero_cluster(model: BipartiteModel, which=1) -> np.ndarray:
    es = subsystem_eigensystem(model, which)
    mags = np.abs(es.values)
    return np.flatnonzero(mags < ZERO_REL * mags.max())


def nls_block_eigenvalues(model: BipartiteModel) -> dict:
    """Nonzero eigenvalue of the all-1/D tail of Psi_1 in both block readings.

    ``trailing`` uses the last D/2-1 coordinates (value 1/2 - 1/D); ``full``
    uses the whole D/2 tail block (value 1/2).
    """
    D = model.D
    out = {}
    for name, size in (("trailing", D // 2 - 1), ("full", D // 2)):
        block = model.Psi1[D - size:, D - size:]
        ev = np.linalg.eigvals(block)
        out[name] = complex(ev[np.argmax(np.abs(ev))])
    return out


def projector_PD(model: BipartiteModel) -> np.ndarray:
    return np.eye(model.D, dtype=complex)


def projector_PDprime(model: BipartiteModel) -> np.ndarray:
    s = model.E.sum(axis=1)
    return np.outer(s, s).astype(complex)


def j_components(model: BipartiteModel, which=1) -> np.ndarray:
    """Components <E_j|J_a>: row norms |psi_j^a|, normalized to unit length."""
    r = np.linalg.norm(model.S(which), axis=1)
    return r / np.linalg.norm(r)


def j_vector(model: BipartiteModel, which=1) -> np.ndarray:
    return (model.E @ j_components(model, which)).astype(complex)


def ground_state(model: BipartiteModel) -> np.ndarray:
    """Unnormalized sum of the canonical right eigenvectors of Psi_1."""
    return subsystem_eigensystem(model, 1).right.sum(axis=1)


def invariant_report(model: BipartiteModel) -> list[dict]:
    """Structural checks, each as {name, measured, expected, tolerance, pass}."""
    D = model.D
    h = D // 2
    rows = []

    def add(name, measured, expected, tol):
        err = np.max(np.abs(np.asarray(measured) - np.asarray(expected)))
        rows.append({"name": name, "measured": _jsonable(measured),
                     "expected": _jsonable(expected), "tolerance": tol,
                     "pass": bool(err <= tol)})

    for a in (1, 2):
        P = model.Psi(a)
        add(f"trace Psi_{a}", np.trace(P), 1.0, 1e-10)
        add(f"symmetry Psi_{a}", np.linalg.norm(P - P.T), 0.0, 1e-12)
    add("rank Psi_1", linalg.rank_tol(model.Psi1), h + 1, 0)
    add("rank Psi_2", linalg.rank_tol(model.Psi2), D, 0)
    tail1 = model.Psi1[h:, h:]
    add("Psi_1 tail block 1/D", np.max(np.abs(tail1 - 1.0 / D)), 0.0, 1e-12)
    tail2 = model.Psi2[h:, h:]
    target = np.full((h, h), (D - 4) / D ** 2) + np.eye(h) * (1.0 / D - (D - 4) / D ** 2)
    add("Psi_2 tail block", np.max(np.abs(tail2 - target)), 0.0, 1e-12)
    ev = nls_block_eigenvalues(model)
    add("NLS nonzero eigenvalue", ev["trailing"], 0.5 - 1.0 / D, 1e-10)
    return rows


def _jsonable(x):
    x = np.asarray(x)
    if x.size == 1:
        v = x.item()
        if isinstance(v, complex):
            return v.real if v.imag == 0 else [v.real, v.imag]
        return v
    return x.tolist()
