"""Evans function on the real spectral window and its derivative at 0.

``D(lambda)`` pairs the stable and unstable bundles at a matching point.
With the weights used by :mod:`bundles` the exponential factors
``e^{2cz}``, ``e^{-(mu1+mu2)z}`` and ``e^{-(mu3+mu4)z}`` cancel, so
``D = exp(s_s + s_u) * pair(x_s, x_u)`` for the unit representatives
``x`` and log scales ``s`` at the matching point.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bundles import (
    SolutionTrajectory,
    lazutkin_treschev,
    stable_bundle,
    strong_stable_solution,
    strong_unstable_solution,
    translation_scales,
    unstable_bundle,
)
from .exterior import pair, plane_basis, symplectic_det
from .profile import WaveProfile
from .system import SystemParams, asymptotic_rates, lambda_window

LAMBDA_MAX = 1.0


@dataclass(frozen=True)
class EvansSample:
    lam: float
    D_wedge: float
    D_symplectic: float
    agreement: float


@dataclass(frozen=True)
class DerivativeReport:
    """Pieces of ``D'(0) = lt * integral`` and a finite-difference check.

    ``lt`` is the invariant ``Omega(u1, u4)`` expressed for the translation
    mode normalised like the bundles, i.e. divided by ``kappa_plus *
    kappa_minus`` (see :func:`bundles.translation_scales`).
    """

    lt: float
    integral: float
    dPrime0: float
    fdCheck: float
    relGap: float
    omega_raw: float
    kappa_plus: float
    kappa_minus: float
    drift: float
    h: float


def default_window(params: SystemParams) -> tuple[float, float]:
    """Scan window ``[-delta/2, LAMBDA_MAX]`` inside ``I = [-delta, inf)``."""
    return -0.5 * lambda_window(params), LAMBDA_MAX


def evans_from_bundles(S, U, z: float = 0.0) -> tuple[float, float]:
    """Wedge and symplectic-determinant forms of ``D`` at matching point ``z``."""
    xs, ls = S.unit(z)
    xu, lu = U.unit(z)
    scale = math.exp(ls + lu)
    a1, a2 = plane_basis(xs)
    b1, b2 = plane_basis(xu)
    return pair(xs, xu) * scale, symplectic_det(a1, a2, b1, b2) * scale


def _agreement(dw: float, ds: float) -> float:
    den = max(abs(dw), abs(ds))
    return 0.0 if den == 0.0 else abs(dw - ds) / den


def evans_at(params: SystemParams, wave: WaveProfile, lam: float, z_match: float = 0.0) -> EvansSample:
    """``D(lambda)`` by both formulas with the matching point ``z_match``."""
    if not wave.zmin < z_match < wave.zmax:
        raise ValueError(f"matching point {z_match} outside the wave domain")
    U = unstable_bundle(params, wave, lam, z_match)
    S = stable_bundle(params, wave, lam, z_match)
    dw, ds = evans_from_bundles(S, U, z_match)
    return EvansSample(float(lam), dw, ds, _agreement(dw, ds))


def _evans_job(args):
    return evans_at(*args)


def evans_scan(params: SystemParams, wave: WaveProfile, grid, workers: int | None = None) -> list[EvansSample]:
    """``D`` on a sorted, de-duplicated ``grid``; runs on ``workers``
    processes when more than one is requested."""
    lams = [float(x) for x in grid]
    uniq = sorted(set(lams))
    if len(uniq) < len(lams):
        warnings.warn("duplicate lambda values removed from the Evans grid", stacklevel=2)
    jobs = [(params, wave, lam) for lam in uniq]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_evans_job, jobs))
    return [_evans_job(j) for j in jobs]


def sign_changes(samples: list[EvansSample]) -> list[tuple[float, float]]:
    """Adjacent sample pairs with a strict sign change of ``D_wedge``
    (compared by sign, since the product of two values may underflow)."""
    return [
        (a.lam, b.lam)
        for a, b in zip(samples, samples[1:])
        if math.copysign(1.0, a.D_wedge) != math.copysign(1.0, b.D_wedge) and a.D_wedge != 0 and b.D_wedge != 0
    ]


def melnikov_integral(params: SystemParams, wave: WaveProfile) -> float:
    """``int e^{cz} (u'^2/sigma - v'^2/alpha) dz`` over the real line.

    The weight is split as ``(e^{cz/2} u')^2`` to stay finite on the long
    tails.  Interior: trapezoid rule with the endpoint-derivative correction
    (fourth order).  Tails: the exponential continuations integrated in
    closed form.
    """
    c, s, a = params.c, wave.sigma, wave.alpha
    z = wave.grid
    half = np.exp(np.clip(0.5 * c * z, -745.0, 709.0))
    du, dv = wave.du * half, wave.dv * half
    ddu, ddv = wave.ddu * half, wave.ddv * half
    g = du * du / s - dv * dv / a
    dg = c * g + 2.0 * (du * ddu / s - dv * ddv / a)
    h = np.diff(z)
    interior = float(np.sum(0.5 * h * (g[:-1] + g[1:]) + h * h / 12.0 * (dg[:-1] - dg[1:])))
    mu = asymptotic_rates(params, 0.0)
    right = g[-1] / -(c + 2.0 * mu[1])
    left = g[0] / (c + 2.0 * mu[2])
    return interior + float(right + left)


@dataclass(frozen=True)
class ZeroData:
    """Strong stable/unstable solutions at ``lambda = 0``."""

    u1: SolutionTrajectory
    u4: SolutionTrajectory


def zero_data(params: SystemParams, wave: WaveProfile) -> ZeroData:
    return ZeroData(strong_stable_solution(params, wave), strong_unstable_solution(params, wave))


def evans_derivative_at_zero(params: SystemParams, wave: WaveProfile, data: ZeroData | None = None,
                             h: float | None = None, window: tuple[float, float] | None = None) -> DerivativeReport:
    """``D'(0)`` from the invariant and the integral, checked against the
    central difference ``(D(h) - D(-h)) / 2h`` with ``h = 1e-4`` times the
    width of the scan window."""
    data = data or zero_data(params, wave)
    omega_raw, drift = lazutkin_treschev(params, data.u1, data.u4)
    kp, km = translation_scales(params, wave)
    lt = omega_raw / (kp * km)
    integral = melnikov_integral(params, wave)
    d0 = lt * integral
    lo, hi = window or default_window(params)
    h = h if h is not None else 1e-4 * (hi - lo)
    fd = (evans_at(params, wave, h).D_wedge - evans_at(params, wave, -h).D_wedge) / (2.0 * h)
    gap = abs(fd - d0) / abs(d0) if d0 != 0 else math.inf
    return DerivativeReport(lt, integral, d0, fd, gap, omega_raw, kp, km, drift, h)
