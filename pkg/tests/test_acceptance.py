"""Acceptance suite: one PASS/FAIL line per criterion, printed at session end.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines
appear under "acceptance criteria" in the terminal report.
"""

from __future__ import annotations

import io
import time
from fractions import Fraction

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from finitegauge import cli
from finitegauge.electric import (
    cayley_laplacian,
    electric_levels,
    gamma_preset,
    ground_degeneracy,
    transfer_matrix_gamma,
    valid_gamma_unions,
    validate_gamma,
)
from finitegauge.group import build_cyclic, build_dihedral, build_symmetric
from finitegauge.lattice import hypercubic
from finitegauge.oracle_check import run_oracle_checks
from finitegauge.representation import (
    SiteSignature,
    averaging_projector,
    builtin_irreps,
    invariance_residual,
    verify_irreps,
)
from finitegauge.spectra import default_grid, hellmann_feynman_residual, sweep, transition_points
from finitegauge.spin_network import enumerate_basis, physical_dimension

ELECTRIC_ROWS = {"gamma1": [0, 4, 4, 8, 4], "gamma2": [0, 8, 8, 8, 6], "gamma3": [0, 4, 0, 4, 4]}
REFERENCE_DIMENSIONS = [((2, 2), False, 5), ((2, 2), True, 8960), ((2, 3), False, 28), ((2, 3), True, 536576),
                        ((3, 3), False, 1216), ((3, 3), True, 269221888)]  # fmt: skip
TRANSITIONS = {
    "gamma1": {"electric": 0.67, "magnetic": 0.67, "fidelity": 0.67},
    "gamma2": {"electric": 0.76, "magnetic": 0.76, "fidelity": 0.76},
    "gamma3": {"electric": 0.63, "magnetic": 0.61, "fidelity": 0.62},
}
WINDOW = 0.02


def report(number: int, ok: bool, detail: str, elapsed: float, budget: float) -> None:
    within = elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    line = f"criterion {number}: {status}  {detail}  [{elapsed:.2f}s / budget {budget:g}s]"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line
    assert within, line


def _cyclic_gamma(n):
    Z = build_cyclic(n)
    return Z, validate_gamma(Z, {1, n - 1})


def _law_cases():
    groups = [build_cyclic(n) for n in range(2, 9)] + [build_dihedral(3), build_dihedral(4)]
    return [(G, gamma) for G in groups for gamma in valid_gamma_unions(G)]


# --------------------------------------------------------------------------


def test_criterion_1_electric_tables():
    t = time.perf_counter()
    D4 = build_dihedral(4)
    S = builtin_irreps(D4)
    ok = True
    for name, row in ELECTRIC_ROWS.items():
        spec = electric_levels(D4, gamma_preset(D4, name), S)
        lap = np.sort(np.linalg.eigvalsh(cayley_laplacian(D4, gamma_preset(D4, name))))
        ok &= list(spec.f) == row and np.max(np.abs(lap - np.sort(spec.multiset()))) < 1e-9
        out = io.StringIO()
        ok &= cli.main(["electric", "--gamma", name], out=out) == 0
        body = [ln for ln in out.getvalue().splitlines() if ln and not ln.startswith("#")][1:]
        ok &= [int(ln.split(",")[2]) for ln in body] == row
    report(1, ok, "gamma1/2/3 rows (0,4,4,8,4) (0,8,8,8,6) (0,4,0,4,4), Cayley spectra agree",
           time.perf_counter() - t, 1.0)  # fmt: skip


def test_criterion_2_cyclic_closed_form():
    t = time.perf_counter()
    worst = 0.0
    symmetric = True
    for n in range(2, 13):
        Z, gamma = _cyclic_gamma(n)
        f = electric_levels(Z, gamma, builtin_irreps(Z)).f
        symmetric &= bool(np.max(np.abs(f[1:] - f[1:][::-1]), initial=0.0) < 1e-12)
        if n >= 3:
            worst = max(worst, float(np.max(np.abs(f - 4 * np.sin(np.pi * np.arange(n) / n) ** 2))))
    Z2, g2 = _cyclic_gamma(2)
    f2 = electric_levels(Z2, g2, builtin_irreps(Z2)).f
    n2_ok = abs(f2[1] - 4.0) < 1e-12
    detail = (
        f"N=3..12 max err {worst:.1e}, f(j)=f(N-j) {'holds' if symmetric else 'FAILS'}; "
        f"N=2: {{xi, xi^-1}} = {{xi}} gives f(1)={f2[1]:g} vs closed form 4"
    )
    elapsed = time.perf_counter() - t
    status = "PASS" if worst < 1e-12 and symmetric and n2_ok and elapsed < 1 else "FAIL"
    ACCEPTANCE_LINES[2] = f"criterion 2: {status}  {detail}  [{elapsed:.2f}s / budget 1s]"
    print(ACCEPTANCE_LINES[2])
    # the N=2 mismatch is asserted separately (strict xfail) so it stays visible
    assert worst < 1e-12 and symmetric and elapsed < 1


@pytest.mark.xfail(strict=True, reason="Z2 generating set {xi, xi^-1} has one element; f(1)=2, not 4 sin^2(pi/2)=4")
def test_criterion_2_cyclic_closed_form_n2():
    Z2, gamma = _cyclic_gamma(2)
    f = electric_levels(Z2, gamma, builtin_irreps(Z2)).f
    assert abs(f[1] - 4 * np.sin(np.pi / 2) ** 2) < 1e-12


def test_criterion_3_spectrum_multiset_law():
    t = time.perf_counter()
    cases = _law_cases()
    d4_unions = sum(1 for G, _ in cases if G.family == ("dihedral", 4))
    worst = 0.0
    for G, gamma in cases:
        spec = electric_levels(G, gamma, builtin_irreps(G))
        ev = np.sort(np.linalg.eigvalsh(cayley_laplacian(G, gamma)))
        worst = max(worst, float(np.max(np.abs(ev - np.sort(spec.multiset())))))
    report(3, worst < 1e-9 and d4_unions == 15,
           f"{len(cases)} (G, Gamma) cases incl. {d4_unions} D4 unions, max err {worst:.1e}",
           time.perf_counter() - t, 10.0)  # fmt: skip


def test_criterion_4_degeneracy_law(s5_six_dim):
    from scipy.sparse.csgraph import connected_components

    t = time.perf_counter()
    ok = True
    for G, gamma in _law_cases():
        lap = cayley_laplacian(G, gamma)
        zeros = int(np.sum(np.abs(np.linalg.eigvalsh(lap)) < 1e-9))
        comps, _ = connected_components(np.diag(np.diag(lap)) - lap, directed=False)
        ok &= ground_degeneracy(G, gamma) == zeros == comps
    D4 = build_dihedral(4)
    d4_g3 = ground_degeneracy(D4, gamma_preset(D4, "gamma3"))
    S5 = build_symmetric(5)
    five_cycles = transfer_matrix_gamma(S5, s5_six_dim)
    s5_deg = ground_degeneracy(S5, five_cycles)
    s5_zeros = int(np.sum(np.abs(np.linalg.eigvalsh(cayley_laplacian(S5, five_cycles))) < 1e-9))
    ok &= d4_g3 == 2 and s5_deg == s5_zeros == 2 and len(five_cycles) == 24
    report(4, ok, f"index = zero modes = components for all cases; D4/gamma3 -> {d4_g3}, S5/5-cycles -> {s5_deg}",
           time.perf_counter() - t, 30.0)  # fmt: skip


def test_criterion_5_dimension_table():
    t = time.perf_counter()
    D4 = build_dihedral(4)
    got = []
    for extents, periodic, want in REFERENCE_DIMENSIONS:
        lat = hypercubic(extents, periodic)
        got.append(physical_dimension(D4, lat.n_links, lat.n_sites) == want)
    rng = np.random.default_rng(11)
    closed = True
    for _ in range(200):
        excess = int(rng.integers(-1, 13))
        V = int(rng.integers(1, 40))
        L = V + excess
        closed &= physical_dimension(D4, L, V) == Fraction(8) ** excess * (2 + 3 * Fraction(2) ** (-excess))
        n = int(rng.integers(2, 13))
        closed &= physical_dimension(build_cyclic(n), L, V) == n ** (excess + 1)
    report(5, all(got) and closed, f"reference dimensions {sum(got)}/6 exact; D4 and Z_N closed forms on 200 random (L, V)",
           time.perf_counter() - t, 1.0)  # fmt: skip


def test_criterion_6_enumeration_counts():
    t = time.perf_counter()
    counts = {}
    for label, G in (("Z2", build_cyclic(2)), ("Z3", build_cyclic(3))):
        S = builtin_irreps(G)
        for periodic in (False, True):
            lat = hypercubic((2, 2), periodic)
            counts[f"{label} {lat.describe()}"] = (len(enumerate_basis(S, lat)), physical_dimension(G, lat.n_links, lat.n_sites))
    S = builtin_irreps(build_dihedral(4))
    for periodic in (False, True):
        lat = hypercubic((2, 2), periodic)
        counts[f"D4 {lat.describe()}"] = (len(enumerate_basis(S, lat)), physical_dimension(S.group, lat.n_links, lat.n_sites))
    ok = all(a == b for a, b in counts.values()) and counts["D4 2x2 periodic"][0] == 8960
    detail = ", ".join(f"{k}: {a}" for k, (a, _) in counts.items())
    report(6, ok, detail, time.perf_counter() - t, 300.0)


def test_criterion_7_oracle_equivalence():
    t = time.perf_counter()
    rows = run_oracle_checks()
    failed = [f"{r['case']} {r['check']}" for r in rows if not r["ok"]]
    spec_err = max(r["value"] for r in rows if r["check"].startswith("spectrum"))
    comm = max(r["value"] for r in rows if r["check"].startswith("[H,P]"))
    detail = f"{len(rows) - len(failed)}/{len(rows)} checks; max spectrum err {spec_err:.1e}, max [H,P] {comm:.1e}"
    if failed:
        detail += "; failed: " + "; ".join(failed)
    report(7, not failed, detail, time.perf_counter() - t, 600.0)


# --------------------------------------------------------------------------
# criteria 8 and 9 share the three full sweeps on the D4 2x2 periodic lattice


@pytest.fixture(scope="module")
def torus_sweeps(torus_hamiltonians):
    out = {}
    for name, H in torus_hamiltonians.items():
        t = time.perf_counter()
        records = sweep(H, default_grid(101))
        out[name] = (records, time.perf_counter() - t)
    return out


@pytest.mark.slow
def test_criterion_8_headline_numbers(torus_hamiltonians, torus_sweeps):
    t = time.perf_counter()
    H1 = torus_hamiltonians["gamma1"]
    frac = H1.nonzero_fraction()
    ok = frac < 0.01
    notes = [f"nonzero fraction {frac:.5f}"]
    e_one = {}
    for name, (records, _) in torus_sweeps.items():
        first, last = records[0], records[-1]
        ok &= abs(first.E0) < 1e-9
        ok &= last.degeneracy >= 2
        ok &= (first.degeneracy >= 2) == (name == "gamma3")
        e_one[name] = last.E0
        est = transition_points(records)
        parts = []
        for method, target in TRANSITIONS[name].items():
            lam = est[method].lam
            hit = lam is not None and abs(lam - target) <= WINDOW
            ok &= hit
            parts.append(f"{method[0].upper()}={lam:.3f}" if lam is not None else f"{method[0].upper()}=none")
        notes.append(f"{name}: " + " ".join(parts))
    spread = max(e_one.values()) - min(e_one.values())
    ok &= spread < 1e-9
    notes.append(f"E0(1) spread {spread:.1e}")
    sweep_time = max(s for _, s in torus_sweeps.values())
    elapsed = time.perf_counter() - t + sum(s for _, s in torus_sweeps.values())
    notes.append(f"slowest sweep {sweep_time:.0f}s")
    report(8, ok and sweep_time < 1800, "; ".join(notes), elapsed, 3 * 1800.0)


@pytest.mark.slow
def test_criterion_9_property_suites(torus_basis, torus_hamiltonians, torus_sweeps):
    t = time.perf_counter()
    checks = {}
    groups = [build_cyclic(n) for n in range(2, 9)] + [build_dihedral(n) for n in range(2, 7)]
    checks["irreps"] = all(verify_irreps(G, builtin_irreps(G)).ok for G in groups)

    S = torus_basis.irreps
    rng = np.random.default_rng(5)
    proj_ok = True
    for _ in range(30):
        k = int(rng.integers(1, 5))
        sig = SiteSignature(tuple((int(rng.integers(0, 5)), bool(rng.integers(0, 2))) for _ in range(k)))
        P = averaging_projector(S, sig)
        tr = np.trace(P).real
        proj_ok &= np.max(np.abs(P @ P - P)) < 1e-12 and abs(tr - round(tr)) < 1e-10
    checks["projectors"] = proj_ok
    checks["invariance"] = max(invariance_residual(S, b) for b in torus_basis.tensors.values()) < 1e-10
    checks["hermitian"] = all(H.hermiticity_error() < 1e-12 for H in torus_hamiltonians.values())

    decomp, hf_worst = 0.0, 0.0
    for name, (records, _) in torus_sweeps.items():
        for r in records:
            decomp = max(decomp, abs(r.E0 - ((1 - r.lam) * r.exp_HE + r.lam * r.exp_HB)))
        hf = hellmann_feynman_residual(records)
        clean = np.array([r.degeneracy == 1 and r.gap > 1e-2 for r in records])
        hf_worst = max(hf_worst, float(np.nanmax(hf[clean])))
    checks["energy identity"] = decomp < 1e-8
    checks["Hellmann-Feynman"] = hf_worst < 0.02
    detail = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
    detail += f"; identity err {decomp:.1e}, HF max {hf_worst * 100:.2f}%"
    report(9, all(checks.values()), detail, time.perf_counter() - t, 600.0)
