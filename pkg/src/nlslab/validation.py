"""Identity suite behind ``nlslab validate``."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import densities as dens
from . import dynamics as dyn
from . import linalg
from .model import (BipartiteModel, ground_state, invariant_report,
                    nls_block_eigenvalues, projector_PD, projector_PDprime,
                    telescoping_sum)


@dataclass
class ValidationReport:
    entries: list = field(default_factory=list)

    def add(self, name, anchor, measured, expected, tolerance):
        m = np.asarray(measured)
        e = np.asarray(expected)
        err = float(np.max(np.abs(m - e))) if m.size else 0.0
        self.entries.append({
            "name": name,
            "anchor": anchor,
            "measured": _plain(measured),
            "expected": _plain(expected),
            "tolerance": tolerance,
            "pass": bool(err <= tolerance),
        })

    @property
    def passed(self) -> int:
        return sum(e["pass"] for e in self.entries)

    @property
    def failed(self) -> int:
        return len(self.entries) - self.passed

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_json(self) -> str:
        return json.dumps({"entries": self.entries,
                           "summary": {"passed": self.passed, "failed": self.failed}},
                          indent=2)

    def table(self) -> str:
        width = max(len(e["name"]) for e in self.entries) if self.entries else 10
        lines = [f"{'check':<{width}}  {'measured':>24}  {'expected':>24}  result"]
        for e in self.entries:
            lines.append(f"{e['name']:<{width}}  {_short(e['measured']):>24}  "
                         f"{_short(e['expected']):>24}  {'PASS' if e['pass'] else 'FAIL'}")
        lines.append(f"{self.passed} passed, {self.failed} failed")
        return "\n".join(lines)


def _plain(x):
    if isinstance(x, Fraction):
        return str(x)
    a = np.asarray(x)
    if a.size == 1:
        v = a.item()
        if isinstance(v, complex):
            return v.real if abs(v.imag) == 0 else [v.real, v.imag]
        return v
    if np.iscomplexobj(a):
        if np.all(a.imag == 0):
            return a.real.tolist()
        return [[z.real, z.imag] for z in a.ravel().tolist()]
    return a.tolist()


def _short(x) -> str:
    if isinstance(x, list):
        return "[" + ", ".join(_short(v) for v in x[:2]) + (", ..." if len(x) > 2 else "") + "]"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _structure(model: BipartiteModel, rep: ValidationReport, tol):
    for row in invariant_report(model):
        rep.entries.append({**row, "anchor": "subsystem structure"})
    ev = nls_block_eigenvalues(model)
    rep.add("NLS block eigenvalue, full tail reading", "nullspace block",
            ev["full"], 0.5, 1e-10)


def _nls(model: BipartiteModel, rep: ValidationReport, tol):
    D = model.D
    N = model.nls.vectors
    rep.add("closed-form vectors annihilated by Psi_1", "nullspace closed form",
            np.max(np.abs(model.Psi1 @ N)), 0.0, max(tol, 1e-12))
    rep.add("closed-form vectors orthonormal", "nullspace closed form",
            np.max(np.abs(N.T @ N - np.eye(N.shape[1]))), 0.0, 1e-12)
    dn = model.d_nls
    rep.add("telescoping sum", "nullspace closed form",
            float(telescoping_sum(dn) - Fraction(dn, dn + 1)), 0.0, 0.0)
    rho = dens.make_density(model, "H:mixed:NLS").mat
    tail = np.diag(rho)[D // 2:]
    rep.add("H;3 diagonal on tail", "nullspace projector", tail, (D - 2) / D, 1e-10)
    off = rho[~np.eye(D, dtype=bool)].mean()
    rep.add("H;3 off-diagonal mean", "nullspace projector", off, -dn / (D * D - D), 1e-10)


def _overlaps(model: BipartiteModel, rep: ValidationReport, tol):
    D = model.D
    table = dens.biortho_table(model)
    rep.add("region sum bulk/bulk", "biorthogonality", table[("bulk", "bulk", "conj")],
            D // 2 + 1, 1e-8)
    rep.add("region sum NLS/NLS", "biorthogonality", table[("NLS", "NLS", "conj")],
            D // 2 - 1, 1e-8)
    rep.add("region sum bulk/NLS", "biorthogonality", table[("bulk", "NLS", "conj")], 0.0, 1e-10)
    rep.add("region sum NLS/bulk", "biorthogonality", table[("NLS", "bulk", "conj")], 0.0, 1e-10)
    ov = dens.state_overlaps(model)
    nls = dens.resolve_indices(model, "NLS")
    rep.add("ground-state NLS overlaps", "ground state", ov[nls], 1.0 / D, 1e-10)
    t3 = dens.ground_overlaps(dens.make_density(model, "nH:mixed:NLS"), model)
    rep.add("nonthermal count nH;3", "nonthermal classification", t3.nonthermal_count, 2, 0)
    rep.add("log threshold", "nonthermal classification", t3.log_threshold, -np.log(D), 1e-12)


def _trace_classes(model: BipartiteModel, rep: ValidationReport, tol):
    D = model.D
    nls = dens.resolve_indices(model, "NLS") + 1
    if nls.size >= 2:
        q = dens.q_operators(model, int(nls[0]), int(nls[1]))
        rep.add("Tr[(Q_ij-Q_ji)^2]", "trace classes", q.trace_diff_sq, -2.0, 1e-10)
        rep.add("Tr[Q_ij-Q_ji]", "trace classes", q.trace_diff, 0.0, 1e-10)
        rep.add("rank(Q_ij-Q_ji)", "trace classes", q.rank_diff, 2, 0)
    prop = dyn.Propagator(model.H)
    PD = projector_PD(model)
    for a in (1, 2):
        O = model.JtJ(a)
        worst = 0.0
        for t in np.linspace(0.0, 50.0, 11):
            U = prop.unitary(t)
            t1 = U @ O @ PD @ U.conj().T
            t2 = O @ U @ PD @ U.conj().T
            h1 = linalg.hs_products(t1, t1)
            h2 = linalg.hs_products(t2, t2)
            worst = max(worst, abs(h1.tr_AdagB - h2.tr_AconjB))
        rep.add(f"HS norm equality a{a}", "Hilbert-Schmidt pair", worst, 0.0, 1e-10)
        tr = prop.trace_series(PD, O, np.linspace(0.0, 100.0, 201))
        rep.add(f"trace conservation a{a}", "diagonal trace conservation",
                np.max(np.abs(tr - 1.0)), 0.0, 1e-10)


def _dynamics(model: BipartiteModel, rep: ValidationReport, tol):
    P = projector_PDprime(model)
    C = dyn.commutator_generator(model.H, P)
    w = dyn.winding_number(model.H, P, 1.0 / np.linalg.norm(C, 2))
    rep.add("winding number at T = 1/|C|", "winding number", w.value, np.sin(1.0), 1e-6)
    r1 = dens.make_density(model, "nH:mixed:all").mat
    forward = dyn.exp_generator(r1)
    worst = 0.0
    for spec in ("nH:mixed:all", "nH:mixed:bulk", "nH:mixed:NLS"):
        r = dens.make_density(model, spec).mat
        for t in (0.3, 1.7, 11.0):
            U = forward(t)
            worst = max(worst, np.max(np.abs(U @ r @ np.linalg.inv(U) - r)))
    rep.add("freeze under e^{i nH;1 t}", "freeze property", worst, 0.0, 1e-9)
    g = ground_state(model)
    r3 = dens.make_density(model, "nH:mixed:NLS").mat
    period = dyn.spectral_period(r3)
    if period is None:
        rep.entries.append({"name": "nH;3 echo revival", "anchor": "echo periodicity",
                            "measured": "no common period", "expected": 0.0,
                            "tolerance": 1e-6, "pass": False})
        return
    rep.add("nH;3 echo revival", "echo periodicity",
            dyn.revival_deviation(r3, g, period, 200.0), 0.0, 1e-6)


SECTIONS = (_structure, _nls, _overlaps, _trace_classes, _dynamics)


def run_suite(model: BipartiteModel, tol: float = 1e-12, workers: int = 1) -> ValidationReport:
    """Run every identity check; sections may run concurrently, order is fixed."""
    parts = [ValidationReport() for _ in SECTIONS]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda sp: sp[0](model, sp[1], tol), zip(SECTIONS, parts)))
    else:
        for section, part in zip(SECTIONS, parts):
            section(model, part, tol)
    rep = ValidationReport()
    for part in parts:
        rep.entries.extend(part.entries)
    return rep
