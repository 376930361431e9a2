"""Acceptance suite.

Each criterion is a list of sub-checks; a criterion passes only when every
sub-check passes.  One ``CRITERION n: PASS|FAIL`` line is printed per
criterion, followed by its sub-check lines.  Run standalone with
``python3 tests/test_acceptance.py`` or through pytest.
"""

from __future__ import annotations

import sys
from fractions import Fraction

import numpy as np
import pytest

from nlslab import densities as dens
from nlslab import dynamics as dyn
from nlslab import linalg
from nlslab.model import (ModelConfig, build, ground_state, j_vector,
                          nls_block_eigenvalues, projector_PD,
                          projector_PDprime, telescoping_sum)

DIMS = (4, 8, 16, 62)
SEEDS = range(10)
_models: dict = {}


def model(D=8, seed=0):
    key = (D, seed)
    if key not in _models:
        _models[key] = build(ModelConfig(D=D, seed=seed))
    return _models[key]


def check(label, measured, expected, tol, rel=False):
    err = float(np.max(np.abs(np.asarray(measured) - np.asarray(expected))))
    bound = tol * float(np.max(np.abs(expected))) if rel else tol
    shown = measured if np.ndim(measured) == 0 else f"max err {err:.3g}"
    return label, err <= bound, f"measured {shown}, expected {expected}, tol {tol}{' rel' if rel else ''}"


def flag(label, ok, detail=""):
    return label, bool(ok), detail


# -- 1 ----------------------------------------------------------------------

def criterion_1():
    out = []
    for D in DIMS:
        m = model(D)
        h = D // 2
        out.append(check(f"D={D} rank Psi_1", linalg.rank_tol(m.Psi1), h + 1, 0))
        out.append(check(f"D={D} rank Psi_2", linalg.rank_tol(m.Psi2), D, 0))
        for a in (1, 2):
            out.append(check(f"D={D} trace Psi_{a}", np.trace(m.Psi(a)), 1.0, 1e-10))
        out.append(check(f"D={D} Psi_1 tail block", m.Psi1[h:, h:], 1.0 / D, 1e-12))
        tail = m.Psi2[h:, h:]
        off = tail[~np.eye(h, dtype=bool)]
        out.append(check(f"D={D} Psi_2 tail diagonal", np.diag(tail), 1.0 / D, 1e-12))
        if off.size:
            out.append(check(f"D={D} Psi_2 tail off-diagonal", off, (D - 4) / D ** 2, 1e-12))
    return out


# -- 2 ----------------------------------------------------------------------

def criterion_2():
    out = []
    for D in DIMS:
        m = model(D)
        N = m.nls.vectors
        dn = D // 2 - 1
        # closed form vs the raw numerical nullspace of Psi_1
        es = linalg.eig_general(m.Psi1)
        Q, _ = np.linalg.qr(es.right[:, np.abs(es.values) < 1e-8])
        resid = np.linalg.norm(N - Q @ (Q.conj().T @ N), axis=0)
        out.append(check(f"D={D} closed-form vectors in numerical nullspace", resid, 0.0, 1e-12))
        out.append(check(f"D={D} Psi_1 annihilates closed form", m.Psi1 @ N, 0.0, 1e-12))
        out.append(check(f"D={D} NLS nonzero eigenvalue",
                         nls_block_eigenvalues(m)["trailing"], 0.5 - 1.0 / D, 1e-10))
        out.append(flag(f"D={D} telescoping sum exact",
                        telescoping_sum(dn) == Fraction(dn, dn + 1),
                        f"{telescoping_sum(dn)} vs {Fraction(dn, dn + 1)}"))
        rho = dens.make_density(m, "H:mixed:NLS").mat
        out.append(check(f"D={D} H;3 tail diagonal", np.diag(rho)[D // 2:], (D - 2) / D, 1e-10))
        out.append(check(f"D={D} H;3 off-diagonal mean",
                         rho[~np.eye(D, dtype=bool)].mean(), -dn / (D * D - D), 1e-10))
    return out


# -- 3 ----------------------------------------------------------------------

def criterion_3():
    m = model(8)
    t = dens.biortho_table(m)
    ov = dens.state_overlaps(m)
    nls = dens.resolve_indices(m, "NLS")
    tab = dens.ground_overlaps(dens.make_density(m, "nH:mixed:NLS"), m)
    return [
        check("bulk/bulk region sum", t[("bulk", "bulk", "conj")], 5.0, 1e-8),
        check("NLS/NLS region sum", t[("NLS", "NLS", "conj")], 3.0, 1e-8),
        check("bulk/NLS region sum", t[("bulk", "NLS", "conj")], 0.0, 1e-8),
        check("NLS/bulk region sum", t[("NLS", "bulk", "conj")], 0.0, 1e-8),
        check("ground-state NLS overlaps", ov[nls], 1 / 8, 1e-10),
        check("log threshold", tab.log_threshold, -2.07944, 1e-5),
        check("nH;3 nonthermal count", tab.nonthermal_count, 2, 0),
    ]


# -- 4 ----------------------------------------------------------------------

def criterion_4():
    m = model(8)
    prop = dyn.Propagator(m.H)
    PD = projector_PD(m)
    times = np.random.default_rng(2024).uniform(0.0, 100.0, 10)
    out = []
    for a in (1, 2):
        O = m.JtJ(a)
        errs = []
        for t in times:
            U = prop.unitary(t)
            first = U @ O @ PD @ U.conj().T
            second = O @ U @ PD @ U.conj().T
            h1 = linalg.hs_products(first, first)
            h2 = linalg.hs_products(second, second)
            errs.append(abs(h1.tr_AdagB - h2.tr_AconjB))
            errs.append(abs(h1.hs_norm_A - h2.hs_norm_A))
        out.append(check(f"a{a} HS-norm equalities at 10 random times", errs, 0.0, 1e-10))
    nls = dens.resolve_indices(m, "NLS") + 1
    q = dens.q_operators(m, int(nls[0]), int(nls[1]))
    out.append(check("Tr[(Q_ij - Q_ji)^2]", q.trace_diff_sq, -2.0, 1e-10))
    grid = np.linspace(0.0, 100.0, 2001)
    for a in (1, 2):
        tr = prop.trace_series(PD, m.JtJ(a), grid)
        out.append(check(f"a{a} trace conservation over grid", tr, 1.0, 1e-10))
    return out


# -- 5 ----------------------------------------------------------------------

def _random_pair(rng, D):
    A = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    rho = A @ A.conj().T
    rho /= np.trace(rho).real
    B = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    return rho, 0.5 * (B + B.conj().T)


def criterion_5():
    m = model(8)
    out = []
    j1 = j_vector(m, 1)
    state = np.outer(j1, j1.conj())
    same = dyn.long_time_average(m.H, state, m.JtJ(1), T=1e3, per_dim=True)
    out.append(check("same pair vs 3/D^2", same.value, 3 / 64, 0.05, rel=True))
    cross = dyn.long_time_average(m.H, state, m.JtJ(2), T=1e3, per_dim=True)
    out.append(check("cross pair vs 1/D^2", cross.value, 1 / 64, 0.05, rel=True))
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(20):
        rho, O = _random_pair(rng, 8)
        avg = dyn.long_time_average(m.H, rho, O, T=1e4, n=100001)
        limit = dyn.dephased_expectation(m.H, rho, O)
        worst = max(worst, abs(avg.value - limit) / avg.fluctuation)
    out.append(flag("20 random pairs within 3x fluctuation", worst <= 3.0,
                    f"worst |avg - limit| / fluctuation = {worst:.3g}"))
    return out


# -- 6 ----------------------------------------------------------------------

def criterion_6():
    m = model(8)
    P = projector_PDprime(m)
    norm = np.linalg.norm(dyn.commutator_generator(m.H, P), 2)
    w_long = dyn.winding_number(m.H, P, 1e3 / norm)
    w_short = dyn.winding_number(m.H, P, 1.0 / norm)
    return [
        check("T = 10^3/|C|", w_long.value, 1.0, 1e-3),
        check("T = 1/|C|", w_short.value, 0.841471, 1e-6),
    ]


# -- 7 ----------------------------------------------------------------------

def criterion_7():
    m = model(8)
    out = []
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        t = rng.uniform(0, 1e3)
        a = np.sort_complex(np.linalg.eigvals(A))
        b = np.sort_complex(np.linalg.eigvals(dyn.evolve(m.H, A, t)))
        worst = max(worst, float(np.max(np.abs(a - b))))
    out.append(check("unitary invariance of spectra", worst, 0.0, 1e-9))

    forward = dyn.exp_generator(dens.make_density(m, "nH:mixed:all").mat)
    worst = 0.0
    for spec in ("nH:mixed:all", "nH:mixed:bulk", "nH:mixed:NLS"):
        r = dens.make_density(m, spec).mat
        for t in (0.3, 2.0, 17.0, 500.0):
            U = forward(t)
            worst = max(worst, float(np.max(np.abs(U @ r @ np.linalg.inv(U) - r))))
    out.append(check("freeze under e^{i nH;1 t}", worst, 0.0, 1e-9))

    g = ground_state(m)
    r3 = dens.make_density(m, "nH:mixed:NLS").mat
    period = dyn.spectral_period(r3)
    dev = dyn.revival_deviation(r3, g, period, 1e3) if period else np.inf
    out.append(check("nH;3 echo revivals", dev, 0.0, 1e-6))

    r1 = dens.make_density(m, "H:mixed:all").mat
    echo = dyn.loschmidt_echo(r1, g, dyn.TimeGrid(0.0, 1e3, 20001))
    collapses = dyn.envelope_collapses(echo, window=50)
    out.append(flag("H;1 echo envelope collapses without revival", collapses,
                    f"echo peak-to-peak {np.ptp(np.real(echo.values)):.3g}"))

    grid = dyn.TimeGrid(0.0, 100.0, 1001)
    p_ok, j_ok = [], []
    for seed in SEEDS:
        ms = model(8, seed)
        P = projector_PDprime(ms)
        v1 = dyn.vie_series(ms.H, P, ms.JtJ(1), grid)
        v2 = dyn.vie_series(ms.H, P, ms.JtJ(2), grid)
        p_ok.append(dyn.gap_persists(v1, v2))
        w = [dyn.vie_series(ms.H, np.outer(j_vector(ms, a), j_vector(ms, a).conj()),
                            ms.JtJ(a), grid) for a in (1, 2)]
        j_ok.append(not dyn.gap_persists(*w))
    out.append(flag("VIE gap persists for P_D' twins (10 seeds)", all(p_ok),
                    f"persisting on {sum(p_ok)}/10 seeds"))
    out.append(flag("VIE gap does not persist for |J><J| twins (10 seeds)", all(j_ok),
                    f"non-persisting on {sum(j_ok)}/10 seeds"))
    return out


# -- 8 ----------------------------------------------------------------------

def multi_edge_values(m, T=1e3):
    Q = {a: dens.make_density(m, f"nH:reduced:all:a{a}").mat for a in (1, 2)}
    order = ((1, 1), (1, 2), (2, 2), (2, 1))
    # e^{-iHt} Q e^{iHt}: evolve under -H
    return [dyn.long_time_average(-m.H, Q[a], m.JtJ(b), T=T, per_dim=True).value.real
            for a, b in order]


def criterion_8():
    ascending = []
    sample = None
    for seed in SEEDS:
        vals = multi_edge_values(model(8, seed))
        sample = sample or vals
        ascending.append(bool(np.all(np.diff(vals) > 0)))
    return [flag("strict ascending order on all 10 seeds", all(ascending),
                 f"ascending on {sum(ascending)}/10 seeds; seed 0 values "
                 + ", ".join(f"{v:.4f}" for v in sample))]


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


def report(n, results) -> str:
    ok = all(r[1] for r in results)
    lines = [f"CRITERION {n}: {'PASS' if ok else 'FAIL'}"]
    for label, good, detail in results:
        lines.append(f"    {'PASS' if good else 'FAIL'}  {label}: {detail}")
    return "\n".join(lines)


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    results = CRITERIA[n]()
    with capsys.disabled():
        print("\n" + report(n, results))
    failed = [r for r in results if not r[1]]
    assert not failed, "; ".join(f"{r[0]} ({r[2]})" for r in failed)


if __name__ == "__main__":
    bad = 0
    for n, fn in CRITERIA.items():
        results = fn()
        bad += not all(r[1] for r in results)
        print(report(n, results))
    sys.exit(1 if bad else 0)
