"""Acceptance criteria 1-10, one PASS/FAIL line each (see the terminal summary).

The FitzHugh-Nagumo runs use a = 0.25, gamma = 0 and eps = 5e-4 (and
eps/2 where a refinement is required).  At eps = 2e-3 the fast-pulse branch
does not exist for these kinetics (it folds near eps = 8.5e-4); the
criterion stated at that value is attempted there and recorded as an
expected failure.
"""
from __future__ import annotations

import json
import math

import numpy as np
import pytest

from wavemaslov.bundles import (
    omega_drift,
    stable_bundle,
    strong_stable_solution,
    strong_unstable_solution,
    unstable_bundle,
    unstable_plane,
)
from wavemaslov.cli import main
from wavemaslov.evans import default_window, evans_at, evans_scan
from wavemaslov.exterior import J, quad_volume, symplectic_det
from wavemaslov.fhn import FhnParams
from wavemaslov.fhn_case import fast_front_crossing_check, run_fhn, singular_vs_full_comparison
from wavemaslov.maslov import maslov_analysis
from wavemaslov.pipeline import PipelineError
from wavemaslov.system import coefficient_matrix, essential_spectrum_clearance, lambda_window

CORPUS = [(0.2, 0.0005, 0.0), (0.3, 0.0003, 0.0), (0.25, 0.0004, 0.5), (0.15, 0.001, 0.0)]


def verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def test_criterion_1_symplectic_identities(fhn_solved, acceptance_log):
    params, wave = fhn_solved
    rng = np.random.default_rng(1)
    lo, _ = default_window(params)
    worst_a = 0.0
    for _ in range(100):
        lam, z = rng.uniform(lo, 2.0), rng.uniform(-wave.L, wave.L)
        A = coefficient_matrix(params, wave, lam, z)
        worst_a = max(worst_a, float(np.max(np.abs(A.T @ J + J @ A + params.c * J))))
    worst_d = 0.0
    for _ in range(1000):
        v = rng.standard_normal((4, 4))
        v /= np.linalg.norm(v, axis=1)[:, None]
        worst_d = max(worst_d, abs(symplectic_det(*v) - quad_volume(*v)))
    ok = worst_a <= 1e-13 and worst_d < 1e-12
    acceptance_log(f"CRITERION 1: {verdict(ok)} max|A^T J + J A + cJ| = {worst_a:.2e} (tol 1e-13), "
                   f"max|symplecticDet - quadVolume| = {worst_d:.2e} (tol 1e-12)")
    assert ok


def test_criterion_2_structure_preservation(fhn_solved, acceptance_log):
    params, wave = fhn_solved
    delta = lambda_window(params)
    worst_g = worst_l = 0.0
    for lam in (-delta / 2, 0.0, 0.5, 2.0):
        for B in (unstable_bundle(params, wave, lam), stable_bundle(params, wave, lam)):
            g, lag = B.residuals()
            worst_g, worst_l = max(worst_g, g), max(worst_l, lag)
    ok = worst_g < 1e-9 and worst_l < 1e-8
    acceptance_log(f"CRITERION 2: {verdict(ok)} Grassmann residual {worst_g:.2e} (tol 1e-9), "
                   f"Lagrangian residual {worst_l:.2e} (tol 1e-8) at lambda in {{-delta/2, 0, 0.5, 2}}")
    assert ok


def test_criterion_3_omega_constancy(fhn_solved, acceptance_log):
    params, wave = fhn_solved
    u1 = strong_stable_solution(params, wave)
    u4 = strong_unstable_solution(params, wave)
    _, drift = omega_drift(params, u1, u4, np.linspace(-wave.L, wave.L, 401))
    ok = drift < 1e-6
    acceptance_log(f"CRITERION 3: {verdict(ok)} relative drift of e^(cz) omega(u1, u4) over [-L, L] "
                   f"= {drift:.2e} (tol 1e-6)")
    assert ok


def test_criterion_4_evans_cross_validation(fhn_solved, acceptance_log):
    params, wave = fhn_solved
    lo, hi = default_window(params)
    samples = evans_scan(params, wave, np.linspace(lo, hi, 20))
    worst = max(s.agreement for s in samples)
    dmax = max(abs(s.D_wedge) for s in samples)
    d0 = evans_at(params, wave, 0.0).D_wedge
    d_top = samples[-1].D_wedge
    ok = worst < 1e-6 and abs(d0) < 1e-7 * dmax and d_top > 0 and len(samples) == 20
    acceptance_log(f"CRITERION 4: {verdict(ok)} worst wedge/symplectic gap {worst:.2e} over 20 points "
                   f"(tol 1e-6), |D(0)|/max|D| = {abs(d0) / dmax:.2e} (tol 1e-7), D(lambda_max) = {d_top:.3e} > 0")
    assert ok


def _criterion_5_line(rep, label):
    d = rep.analysis.derivative
    same_sign = math.copysign(1, d.lt * d.integral) == math.copysign(1, d.fdCheck)
    ok = same_sign and d.relGap < 5e-3 and d.integral > 0 and d.dPrime0 > 0
    return ok, (f"CRITERION 5: {verdict(ok)} {label}: sign(lt*melnikov) = sign(FD) {same_sign}, "
                f"relGap {d.relGap:.2e} (tol 5e-3), melnikov {d.integral:.4g} > 0, dPrime0 {d.dPrime0:.3e} > 0")


def test_criterion_5_derivative_triangulation(fhn_report, acceptance_log):
    ok, line = _criterion_5_line(fhn_report, "eps=5e-4")
    acceptance_log(line)
    assert ok


@pytest.mark.xfail(strict=True, raises=PipelineError,
                   reason="no fast pulse at eps=2e-3 for a=0.25, gamma=0: the branch folds near eps=8.5e-4")
def test_criterion_5_at_eps_2e3(acceptance_log):
    try:
        rep = run_fhn(FhnParams(0.25, 0.002, 0.0))
    except PipelineError as err:
        acceptance_log(f"CRITERION 5: FAIL eps=2e-3: {err}")
        raise
    ok, line = _criterion_5_line(rep, "eps=2e-3")
    acceptance_log(line)


def test_criterion_6_maslov_reproduction(fhn_solved, fhn_report, fhn_half_report, acceptance_log):
    params, wave = fhn_solved
    m = fhn_report.crossings
    u1 = strong_stable_solution(params, wave)
    U = unstable_plane(params, wave, unstable_bundle(params, wave, 0.0), strong_unstable_solution(params, wave))
    margin = wave.L - m.tau  # the validated stretch [tau, L]
    perturbed = [maslov_analysis(params, wave, u1, U, m.tau + s * 0.1 * margin).index for s in (-1, 1)]
    sigs = m.signatures()
    ok = (sigs == [-1, 1, -1, 1] and m.index == 0 and perturbed == [0, 0]
          and fhn_half_report.crossings.index == m.index)
    acceptance_log(f"CRITERION 6: {verdict(ok)} signatures {sigs} (three interior plus the endpoint at tau), "
                   f"index {m.index}; tau +- 0.1 (L - tau) = +-{0.1 * margin:.0f} -> {perturbed}; "
                   f"eps/2 index {fhn_half_report.crossings.index}")
    assert ok


def test_criterion_7_parity(fhn_report, fhn_half_report, acceptance_log):
    rows = []
    for rep in [fhn_report, fhn_half_report] + [run_fhn(FhnParams(*p)) for p in CORPUS]:
        det = rep.analysis.parity_detail
        rows.append((rep.params, (-1) ** rep.crossings.index == np.sign(rep.lt), det["beta_slope_matches"]))
    ok = all(r[1] and r[2] for r in rows)
    detail = "; ".join(f"a={p.a} eps={p.eps} gamma={p.gamma}: parity {a} slope {b}" for p, a, b in rows)
    acceptance_log(f"CRITERION 7: {verdict(ok)} (-1)^index = sign(lt) and beta'(tau) sign on {len(rows)} runs ({detail})")
    assert ok


def test_criterion_8_singular_limit(fhn_report, fhn_half_report, acceptance_log):
    full = singular_vs_full_comparison(fhn_report)
    half = singular_vs_full_comparison(fhn_half_report)
    ratio = half["front_error"] / full["front_error"]
    signs = [fast_front_crossing_check(FhnParams(a, 0.001, 0.0))[1] for a in (0.1, 0.2, 0.3, 0.4)]
    ok = 0.3 <= ratio <= 0.7 and signs == [-1, -1, -1, -1]
    acceptance_log(f"CRITERION 8: {verdict(ok)} front crossing error {full['front_error']:.3e} -> "
                   f"{half['front_error']:.3e} as eps halves (ratio {ratio:.3f}, band [0.3, 0.7]); "
                   f"fast-front crossing form signs {signs}")
    assert ok


def test_criterion_9_essential_spectrum(fhn_solved, acceptance_log):
    clear, K = essential_spectrum_clearance(fhn_solved[0])
    ok = clear and K < 0
    acceptance_log(f"CRITERION 9: {verdict(ok)} clear={clear}, K_estimate={K:.4e} < 0")
    assert ok


def test_criterion_10_determinism(saved_profile, tmp_path, acceptance_log):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"wave": {"source": "file", "path": str(saved_profile)},
                               "analysis": {"lambda_steps": 2, "lambda_min": 0.5, "lambda_max": 1.0}}))
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["analyze", "--config", str(cfg), "--out", str(o)]) for o in outs]
    same = {n: (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in ("evans.csv", "beta.csv")}
    reports = [json.loads((o / "report.json").read_text()) for o in outs]
    for r in reports:
        r.pop("meta")
    same["report.json (data)"] = reports[0] == reports[1]
    ok = codes == [0, 0] and all(same.values())
    acceptance_log(f"CRITERION 10: {verdict(ok)} identical analyze runs, byte-identical: {same}")
    assert ok
