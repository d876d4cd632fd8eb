"""FitzHugh-Nagumo fast pulse: the full stability pipeline and its
comparison with the singular limit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exterior import PlaneBasis, omega, plane_basis
from .fhn import FhnParams, fhn_singular_orbit, nagumo_front
from .homoclinic import HomoclinicOptions, solve_homoclinic
from .maslov import MaslovResult, principal_angle
from .pipeline import AnalysisOptions, PipelineError, WaveAnalysis, analyze_wave
from .profile import WaveProfile
from .system import ParameterError

SQRT2 = math.sqrt(2.0)


@dataclass
class FhnReport:
    params: FhnParams
    c: float
    crossings: MaslovResult
    melnikov: float
    lt: float
    dPrime0: float
    consistent: bool
    analysis: WaveAnalysis

    @property
    def wave(self) -> WaveProfile:
        return self.analysis.wave


def fhn_wave(p: FhnParams, opts: HomoclinicOptions | None = None) -> tuple[WaveProfile, float]:
    """Fast pulse for ``p`` continued from the singular orbit."""
    try:
        orbit = fhn_singular_orbit(p)
    except Exception as err:
        raise PipelineError("singular-orbit", err) from err
    try:
        wave, c = solve_homoclinic(p.system(orbit.c), orbit, opts)
    except Exception as err:
        raise PipelineError("homoclinic", err) from err
    return wave, c


def run_fhn(p: FhnParams, opts: AnalysisOptions | None = None, solver: HomoclinicOptions | None = None,
            wave: WaveProfile | None = None) -> FhnReport:
    """Singular orbit, homoclinic solve, bundles, Evans data, Maslov index
    and the parity check; errors carry the failing stage."""
    if wave is None:
        wave, c = fhn_wave(p, solver)
    else:
        c = wave.c
    sysp = p.system(c)
    res = analyze_wave(sysp, wave, opts or AnalysisOptions(scan_evans=False))
    consistent = bool(res.consistent and res.sign_routes_agree)
    return FhnReport(p, c, res.maslov, res.derivative.integral, res.derivative.lt,
                     res.derivative.dPrime0, consistent, res)


def mu1_layer(a: float, u: float, c: float | None = None) -> float:
    """Strong stable rate ``-c/2 - sqrt(c^2 - 4 f'(u))/2`` of the layer
    problem linearised at ``u`` (``c`` defaults to the Nagumo speed)."""
    c = nagumo_front(a)[0] if c is None else c
    fp = -a + 2.0 * (1.0 + a) * u - 3.0 * u * u
    disc = c * c - 4.0 * fp
    if disc <= 0:
        raise ParameterError(f"layer rates at u={u} are not real")
    return -0.5 * c - 0.5 * math.sqrt(disc)


def fast_front_crossing_check(p: FhnParams, u_tau: float = 0.0) -> tuple[float, int]:
    """Predicted ``u`` of the fast-front conjugate point and the sign of the
    crossing form there.

    The conjugate point sits at ``u* = 1/2 - mu1(u_tau)/sqrt(2)``, which
    lies in ``(1/2, 1)`` exactly when ``-sqrt(2)/2 < mu1(u_tau) < 0``.  The
    crossing form evaluates to ``-f'(u_tau)^2 (f'(u*) - f'(u_tau))`` (using
    ``mu1^2 + c mu1 = -f'(u_tau)``).
    """
    a = p.a
    c = nagumo_front(a)[0]
    mu1 = mu1_layer(a, u_tau, c)
    if not (-SQRT2 / 2 < mu1 < 0):
        raise ParameterError(f"mu1(u_tau)={mu1:.6g} outside (-sqrt(2)/2, 0): no fast-front conjugate point")
    u_star = 0.5 - mu1 / SQRT2

    def fp(u):
        return -a + 2.0 * (1.0 + a) * u - 3.0 * u * u

    gamma = -fp(u_tau) ** 2 * (mu1 * mu1 + c * mu1 + fp(u_star))
    return u_star, int(np.sign(gamma))


def cylinder_plane(u: float) -> np.ndarray:
    """Tangent plane of the cylinder over the Nagumo front at level ``u``."""
    return np.column_stack([[1.0, 0.0, SQRT2 / 2 - u * SQRT2, 0.0], [0.0, 0.0, 0.0, 1.0]])


def slow_left_tangent(a: float, gamma: float, u_tau: float) -> np.ndarray:
    """Tangent of the left slow manifold (differentiated in ``v``) at ``u_tau``."""
    c = nagumo_front(a)[0]
    fp = -a + 2.0 * (1.0 + a) * u_tau - 3.0 * u_tau * u_tau
    return np.array([1.0 / fp, 1.0, 0.0, (gamma - 1.0 / fp) / c])


def singular_vs_full_comparison(report: FhnReport) -> dict:
    """Distances between the computed crossings/planes and the singular
    predictions: ``u`` at the fast-front crossing versus ``u*``, the angle
    between ``E^u(0, 0)`` and the cylinder plane, and the angle between
    ``phi'`` and the left slow tangent at the slow-piece crossing."""
    p = report.params
    res = report.analysis
    wave = res.wave
    tau = res.maslov.tau
    u_tau = wave.uv(tau)[0]
    u_star, gsign = fast_front_crossing_check(p, u_tau)
    interior = res.maslov.crossings
    front = next((cp for cp in interior if cp.signature < 0), None)
    out = {"u_tau": u_tau, "u_star": u_star, "gamma_sign": gsign, "eps": p.eps}
    if front is not None:
        out["z_front"] = front.zStar
        out["u_front"] = front.u_hat
        out["front_error"] = abs(front.u_hat - u_star)
    # E^u at the front midpoint (z = 0): span{phi'(0), u4(0)}
    from .bundles import strong_unstable_solution

    u4 = strong_unstable_solution(res.params, wave, z_end=1.0)
    x4, _ = u4.unit(0.0)
    Eu = np.column_stack([wave.phi_prime(0.0), x4])
    out["front_angle"] = principal_angle(Eu, cylinder_plane(wave.uv(0.0)[0]))
    slow = next((cp for cp in interior if cp.signature > 0), None)
    if slow is not None:
        t = slow_left_tangent(p.a, p.gamma, u_tau)
        phi = wave.phi_prime(slow.zStar)
        cosang = abs(phi @ t) / (np.linalg.norm(phi) * np.linalg.norm(t))
        out["z_slow"] = slow.zStar
        out["slow_angle"] = math.acos(min(1.0, cosang))
    return out
