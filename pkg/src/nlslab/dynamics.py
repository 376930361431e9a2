"""Time evolution and time-averaged diagnostics.

Unitary evolution ``A(t) = e^{iHt} A e^{-iHt}`` is always computed from the
spectral decomposition of the Hermitian generator, which keeps it exactly
unitary.  Non-Hermitian generators (the echo of ``e^{i rho t}``) go through
the general eigendecomposition when it is well conditioned and through
Padé ``expm`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg


class NotHermitian(ValueError):
    pass


class DegenerateSpectrum(ValueError):
    pass


class EmptyIntersection(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n: int
    spacing: str = "linear"

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise ValueError("t0 must be smaller than t1")
        if self.n < 2:
            raise ValueError("need at least two samples")
        if self.spacing not in ("linear", "log"):
            raise ValueError("spacing is 'linear' or 'log'")
        if self.spacing == "log" and self.t0 <= 0:
            raise ValueError("log spacing needs t0 > 0")

    @property
    def times(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.t0, self.t1, self.n)
        return np.linspace(self.t0, self.t1, self.n)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    grid: TimeGrid
    values: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) != self.grid.n:
            raise ValueError("values do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series has non-finite samples")

    @property
    def t(self) -> np.ndarray:
        return self.grid.times

    def to_csv(self) -> str:
        lines = ["t,re,im"]
        for t, v in zip(self.t, np.asarray(self.values, complex)):
            lines.append(f"{t:.17g},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(lines) + "\n"

    def to_value_csv(self) -> str:
        lines = ["t,value"]
        for t, v in zip(self.t, np.real(self.values)):
            lines.append(f"{t:.17g},{v:.17g}")
        return "\n".join(lines) + "\n"


class Propagator:
    """Cached spectral decomposition of a Hermitian generator."""

    def __init__(self, H, tol: float = 1e-10):
        H = linalg.as_square(H, "H")
        if not linalg.is_hermitian(H, tol):
            raise NotHermitian("generator must be Hermitian")
        self.H = H
        self.energies, self.vectors = np.linalg.eigh(0.5 * (H + H.conj().T))

    def unitary(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(1j * self.energies * t)) @ self.vectors.conj().T

    def to_eigenbasis(self, A) -> np.ndarray:
        return self.vectors.conj().T @ np.asarray(A, complex) @ self.vectors

    def trace_series(self, rho0, O, times) -> np.ndarray:
        """Tr[e^{iHt} rho0 e^{-iHt} O] for every t, in O(D^2) per sample."""
        R = self.to_eigenbasis(rho0)
        Ob = self.to_eigenbasis(O)
        weights = (R * Ob.T).ravel()
        omega = (self.energies[:, None] - self.energies[None, :]).ravel()
        keep = weights != 0
        weights, omega = weights[keep], omega[keep]
        out = np.empty(len(times), complex)
        for start in range(0, len(times), 512):
            ts = np.asarray(times[start:start + 512])
            out[start:start + 512] = np.exp(1j * np.outer(ts, omega)) @ weights
        return out


def evolve(H, A, t: float) -> np.ndarray:
    """e^{iHt} A e^{-iHt}."""
    U = Propagator(H).unitary(t)
    return U @ np.asarray(A, complex) @ U.conj().T


def exp_generator(rho):
    """Return a callable t -> expm(i·rho·t)."""
    rho = linalg.as_square(rho, "rho")
    if linalg.is_hermitian(rho, 1e-12):
        w, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        return lambda t: (V * np.exp(1j * w * t)) @ V.conj().T
    es = linalg.eig_general(rho)
    if np.linalg.cond(es.right) < 1e8:
        Vinv = np.linalg.inv(es.right)
        return lambda t: (es.right * np.exp(1j * es.values * t)) @ Vinv
    return lambda t: linalg.expm(1j * rho * t)


def loschmidt_echo(rho, g, grid: TimeGrid, normalized: bool = False) -> TimeSeries:
    """|<g|e^{i rho t}|g>|^2 on the grid."""
    g = np.asarray(g, complex)
    if normalized:
        g = g / np.linalg.norm(g)
    U = exp_generator(rho)
    vals = np.array([abs(g.conj() @ U(t) @ g) ** 2 for t in grid.times])
    return TimeSeries(grid, vals, "loschmidt_echo", {"normalized_state": normalized})


def vie(A) -> float:
    """Population variance of the imaginary parts of the eigenvalues."""
    ev = np.linalg.eigvals(linalg.as_square(A))
    return float(np.var(ev.imag))


def vie_series(H, rho0, O, grid: TimeGrid) -> TimeSeries:
    prop = Propagator(H)
    rho0 = np.asarray(rho0, complex)
    O = np.asarray(O, complex)
    vals = []
    for t in grid.times:
        U = prop.unitary(t)
        vals.append(vie(U @ rho0 @ U.conj().T @ O))
    return TimeSeries(grid, np.array(vals), "vie")


def gap_persists(a: TimeSeries, b: TimeSeries, floor: float = 0.0) -> bool:
    """True when a - b keeps one strict sign over the whole grid."""
    d = np.real(a.values) - np.real(b.values)
    return bool(np.all(d > floor) or np.all(d < -floor))


@dataclass(frozen=True)
class Average:
    value: complex
    fluctuation: float
    T: float
    n: int
    richardson: float


def long_time_average(H, rho0, O, T: float, n: int = 20001,
                      per_dim: bool = False) -> Average:
    """(1/T)∫_0^T Tr[e^{iHt} rho0 e^{-iHt} O] dt by the trapezoid rule.

    ``fluctuation`` is the standard deviation of the running average over
    the last half of the window; ``richardson`` is the change when the step
    is doubled.  With ``per_dim`` the result is further divided by D.
    """
    if n < 3:
        raise ValueError("need at least three samples")
    prop = Propagator(H)
    t = np.linspace(0.0, T, n)
    f = prop.trace_series(rho0, O, t)
    dt = t[1] - t[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * dt)])
    value = cum[-1] / T
    running = cum[1:] / t[1:]
    tail = running[len(running) // 2:]
    fluct = float(np.std(tail.real) + np.std(tail.imag))
    coarse = np.trapezoid(f[::2], t[::2]) / T if (n - 1) % 2 == 0 else value
    scale = 1.0 / rho0.shape[0] if per_dim else 1.0
    return Average(complex(value * scale), fluct * scale, T, n,
                   float(abs(coarse - value) * scale))


def dephased_expectation(H, rho0, O, gap_tol: float = 1e-10,
                         per_dim: bool = False) -> complex:
    """Σ_j <E_j|rho0|E_j><E_j|O|E_j>, the infinite-time average."""
    prop = Propagator(H)
    if np.min(np.diff(prop.energies)) < gap_tol:
        raise DegenerateSpectrum("generator has (near-)degenerate levels")
    R = np.diag(prop.to_eigenbasis(rho0))
    Ob = np.diag(prop.to_eigenbasis(O))
    val = complex(np.sum(R * Ob))
    return val / rho0.shape[0] if per_dim else val


def commutator_generator(H, Pprime, eps: float = 1e-12) -> np.ndarray:
    """C = [H, i·log(P' + eps·I)], the generator of the winding phase."""
    if eps == 0:
        raise linalg.SingularInput("winding number needs eps > 0")
    L = 1j * linalg.logm_principal(Pprime, eps)
    H = np.asarray(H, complex)
    return H @ L - L @ H


@dataclass(frozen=True)
class Winding:
    value: float
    T: float
    norm_C: float
    support: int


def winding_number(H, Pprime, T: float, eps: float = 1e-12,
                   support_tol: float = 1e-9) -> Winding:
    """Re (1/T)∫_0^T e^{-itC} dt, averaged over the support of C.

    Each nonzero eigenvalue c of C contributes sin(cT)/(cT); the result is
    their mean.  A vanishing C gives exactly 1.
    """
    C = commutator_generator(H, Pprime, eps)
    w = np.linalg.eigvals(C)
    normC = float(np.linalg.norm(C, 2))
    # roundoff in C scales with |H|·|log P'|, not with |C|
    scale = np.linalg.norm(H, 2) * np.linalg.norm(linalg.logm_principal(Pprime, eps), 2)
    live = np.abs(w) > support_tol * max(normC, scale * 1e-3)
    if normC <= 1e-12 * scale or not np.any(live):
        return Winding(1.0, T, normC, 0)
    x = w[live] * T
    avg = 1j * (np.exp(-1j * x) - 1) / x
    return Winding(float(np.mean(avg).real), T, normC, int(live.sum()))


def matrix_power_eig(rho, p: complex, eps: float = 1e-12) -> np.ndarray:
    """(rho + eps·I)^p through the eigendecomposition."""
    rho = linalg.as_square(rho)
    n = rho.shape[0]
    if linalg.is_hermitian(rho, 1e-14):
        w, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        noise = n * np.finfo(float).eps * max(np.max(np.abs(w)), 1.0)
        w = (np.where(np.abs(w) <= noise, 0.0, w) + eps).astype(complex)
        Vinv = V.conj().T
    else:
        es = linalg.eig_general(rho + eps * np.eye(n))
        w, V = es.values, es.right
        Vinv = np.linalg.inv(V)
    if np.any(w == 0):
        raise linalg.SingularInput("zero eigenvalue; increase eps")
    return (V * np.exp(p * np.log(w))) @ Vinv


def rank_raise(rho, T: float, eps: float = 1e-12) -> np.ndarray:
    """exp(-iT·log(rho^{i/T})) with the principal branch of the outer log."""
    if T <= 0:
        raise ValueError("T must be positive")
    inner = matrix_power_eig(rho, 1j / T, eps)
    L = linalg.logm_principal(inner, 0.0)
    return linalg.expm(-1j * T * L)


def t_max_scan(rho, T_list, eps: float = 1e-12, tol: float | None = None) -> float | None:
    """Largest T in ``T_list`` whose rank-raised matrix is full rank."""
    D = np.asarray(rho).shape[0]
    best = None
    for T in sorted(T_list):
        if linalg.rank_tol(rank_raise(rho, T, eps), tol) == D:
            best = T
    return best


def first_order_projector(H, Pprime, t: float, eps: float = 1e-12) -> np.ndarray:
    """P' e^{-it[H, ln P'^i]}, the first-order stand-in for exact evolution."""
    C = commutator_generator(H, Pprime, eps)
    return np.asarray(Pprime, complex) @ linalg.expm(-1j * t * C)


def phase_factor_expectation(H, set_i, set_j, grid: TimeGrid) -> TimeSeries:
    """(1/|k|) Σ_{i∈I} <E_i| e^{iHt} Σ_{j∈J} |E_j>, k = I ∩ J (1-based sets)."""
    prop = Propagator(H)
    D = prop.energies.size
    I = np.asarray(sorted(set(set_i)), int) - 1
    J = np.asarray(sorted(set(set_j)), int) - 1
    if np.any(I < 0) or np.any(J < 0) or np.any(I >= D) or np.any(J >= D):
        raise IndexError("index sets must lie in 1..D")
    k = np.intersect1d(I, J)
    if k.size == 0:
        raise EmptyIntersection("index sets do not overlap")
    bra = prop.vectors[:, I].sum(axis=1)
    ket = prop.vectors[:, J].sum(axis=1)
    a = prop.vectors.conj().T @ bra
    b = prop.vectors.conj().T @ ket
    t = grid.times
    vals = (np.exp(1j * np.outer(t, prop.energies)) @ (a.conj() * b)) / k.size
    return TimeSeries(grid, vals, "phase_factor", {"dim_k": int(k.size)})


def echo_envelope(series: TimeSeries, window: int) -> dict:
    """Rolling max and min over a centered window of ``window`` samples."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.real(series.values)
    n = x.size
    half = window // 2
    upper = np.empty(n)
    lower = np.empty(n)
    for i in range(n):
        seg = x[max(0, i - half): min(n, i + half + 1)]
        upper[i] = seg.max()
        lower[i] = seg.min()
    return {"upper": upper, "lower": lower}


def spectral_period(rho, tol: float = 1e-9) -> float | None:
    """Common period of e^{i rho t} when all level gaps share a base frequency.

    Returns None for non-real spectra or incommensurate gaps.
    """
    w = np.linalg.eigvals(linalg.as_square(rho))
    if np.max(np.abs(w.imag)) > tol:
        return None
    levels = np.array([w.real[c].mean() for c in linalg.eigen_clusters(w.real, tol)])
    gaps = np.abs(levels[:, None] - levels[None, :])
    gaps = gaps[gaps > tol]
    if gaps.size == 0:
        return None
    base = gaps.min()
    ratio = gaps / base
    if np.max(np.abs(ratio - np.round(ratio))) > 1e-6:
        return None
    return float(2 * np.pi / base)


def revival_deviation(rho, g, period: float, horizon: float) -> float:
    """Max relative deviation of the echo at t = k·period from its t=0 value."""
    k = np.arange(1, int(horizon // period) + 1)
    if k.size == 0:
        return 0.0
    grid = TimeGrid(0.0, float(k[-1] * period), k.size + 1)
    x = np.real(loschmidt_echo(rho, g, grid).values)
    return float(np.max(np.abs(x[1:] - x[0])) / max(abs(x[0]), 1e-300))


def autocorrelation_period(series: TimeSeries) -> float:
    """Dominant period from the first local maximum of the autocorrelation."""
    x = np.real(series.values) - np.mean(np.real(series.values))
    n = x.size
    f = np.fft.rfft(x, 2 * n)
    ac = np.fft.irfft(f * np.conj(f))[:n]
    dt = series.t[1] - series.t[0]
    for i in range(1, n - 1):
        if ac[i] >= ac[i - 1] and ac[i] > ac[i + 1] and ac[i] > 0:
            return float(i * dt)
    return float("nan")


def envelope_collapses(series: TimeSeries, window: int = 50,
                       drop: float = 0.5, revisit: float = 0.99) -> bool:
    """Whether the upper envelope falls below ``drop``·(initial) and then never
    climbs back above ``revisit``·(initial)."""
    env = echo_envelope(series, window)["upper"]
    x0 = float(np.real(series.values[0]))
    below = np.flatnonzero(env < drop * x0)
    if below.size == 0:
        return False
    return bool(np.all(env[below[0]:] < revisit * x0))
