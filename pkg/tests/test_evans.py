import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import simpson

from wavemaslov.evans import (
    LAMBDA_MAX,
    EvansSample,
    default_window,
    evans_at,
    evans_scan,
    melnikov_integral,
    sign_changes,
)


@pytest.fixture(scope="module")
def edge_samples(fhn_solved):
    params, wave = fhn_solved
    lo, hi = default_window(params)
    return {lam: evans_at(params, wave, lam) for lam in (lo, 0.0, hi)}


def test_window_sits_inside_the_real_rate_region(fhn_solved):
    params, _ = fhn_solved
    lo, hi = default_window(params)
    assert lo < 0 < hi == LAMBDA_MAX


def test_wedge_and_symplectic_forms_agree(edge_samples):
    for s in edge_samples.values():
        if s.lam != 0.0:
            assert s.agreement < 1e-6
            assert s.D_wedge == pytest.approx(s.D_symplectic, rel=1e-6)


def test_evans_function_signs(edge_samples, fhn_solved):
    params, _ = fhn_solved
    lo, hi = default_window(params)
    D = {k: v.D_wedge for k, v in edge_samples.items()}
    assert D[hi] > 0
    # the translation eigenvalue: D(0) vanishes to round-off relative to the scan
    assert abs(D[0.0]) < 1e-7 * max(abs(D[lo]), abs(D[hi]))
    # D' (0) > 0 with one real zero in the window implies D < 0 just below it
    assert D[lo] < 0


def test_weighted_evans_function_is_independent_of_matching_point(fhn_solved):
    params, wave = fhn_solved
    a = evans_at(params, wave, 0.4, z_match=0.0).D_wedge
    b = evans_at(params, wave, 0.4, z_match=3.0).D_wedge
    assert a == pytest.approx(b, rel=1e-6)
    with pytest.raises(ValueError):
        evans_at(params, wave, 0.4, z_match=2 * wave.L)


def test_scan_sorts_and_deduplicates(fhn_solved):
    params, wave = fhn_solved
    with pytest.warns(UserWarning, match="duplicate"):
        out = evans_scan(params, wave, [0.9, 0.6, 0.9])
    assert [s.lam for s in out] == [0.6, 0.9]


def _sample(lam, d):
    return EvansSample(lam, d, d, 0.0)


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False).filter(lambda x: x != 0), min_size=2, max_size=30))
def test_sign_changes_counts_strict_sign_flips(values):
    samples = [_sample(float(i), v) for i, v in enumerate(values)]
    brackets = sign_changes(samples)
    flips = int(np.sum(np.diff(np.sign(values)) != 0))
    assert len(brackets) == flips
    for a, b in brackets:
        assert b == a + 1


def test_melnikov_integral_matches_direct_quadrature(fhn_solved):
    params, wave = fhn_solved
    M = melnikov_integral(params, wave)
    z = wave.grid
    with np.errstate(over="ignore"):
        w = np.exp(np.clip(params.c * z, -745, 709))
    direct = simpson(w * (wave.du**2 / wave.sigma - wave.dv**2 / wave.alpha), x=z)
    assert M > 0
    assert M == pytest.approx(direct, rel=1e-6)


def test_derivative_triangulation(fhn_report):
    d = fhn_report.analysis.derivative
    assert d.dPrime0 == d.lt * d.integral
    assert math.copysign(1, d.dPrime0) == math.copysign(1, d.fdCheck)
    assert d.relGap < 5e-3
    assert d.drift < 1e-6
