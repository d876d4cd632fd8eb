"""Conjugate points, crossing forms and the Maslov index of a wave.

The unstable bundle ``E^u(0, z)`` is compared with the reference plane
``E^s(0, tau)`` spanned by the strong stable solution and the translation
mode at ``tau``.  Intersections are located as zeros of the detection
function ``beta(z)``, the 4-form pairing of the reference plane with the
unstable bundle, normalised so that ``beta -> rho > 0`` as ``z -> -inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .bundles import SolutionTrajectory, UnstablePlane, translation_scales
from .exterior import (
    IrregularGeometryError,
    PlaneBasis,
    omega,
    pair,
    plane_basis,
    plane_intersection,
    quad_volume,
    symplectic_det,
    wedge,
)
from .profile import WaveProfile
from .system import SystemParams, asymptotic_frame, asymptotic_rates, coefficient_matrix

ANGLE_TOL = 1e-3
ZERO_XTOL = 1e-10
REGULARITY_FLOOR = 1e-6
BETA_2D = 1e-10
DBETA_2D = 1e-8
MIN_SCAN = 2000
TAU_LEVEL = 1e-2


class ConjugatePointError(RuntimeError):
    """Reference plane unusable or a crossing is irregular."""


# ---------------------------------------------------------------------------
# reference plane
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReferencePlane:
    """``E^s(0, tau)`` with weighted basis vectors.

    ``basis1 = e^{-mu1 tau} u1(tau)`` and ``basis2 = e^{-mu2 tau}
    phi'(tau) / kappa_plus``; both tend to ``eta1``/``eta2`` as ``tau``
    grows, which makes ``beta(-inf)`` close to ``rho``.
    """

    tau: float
    basis1: np.ndarray
    basis2: np.ndarray
    validated: bool
    min_angle: float

    @property
    def two_vector(self) -> np.ndarray:
        return wedge(self.basis1, self.basis2)

    @property
    def plane(self) -> PlaneBasis:
        return PlaneBasis(self.basis1, self.basis2)


def default_tau(wave: WaveProfile, level: float = TAU_LEVEL) -> float:
    """Rightmost grid point where ``|u|`` is still ``level`` times its peak."""
    idx = np.nonzero(np.abs(wave.u) >= level * np.max(np.abs(wave.u)))[0]
    return float(wave.grid[idx[-1]])


def principal_angle(P: np.ndarray, Q: np.ndarray) -> float:
    """Smallest principal angle between the column spans of ``P`` and ``Q``."""
    qp, _ = np.linalg.qr(P)
    qq, _ = np.linalg.qr(Q)
    s = np.linalg.svd(qp.T @ qq, compute_uv=False)
    return float(math.acos(min(1.0, s[0])))


def reference_plane(params: SystemParams, wave: WaveProfile, u1: SolutionTrajectory, tau: float,
                    angle_tol: float = ANGLE_TOL, sweep: int = 400) -> ReferencePlane:
    """Reference plane at ``tau``, validated on ``[tau, L]``.

    For every ``tau'`` in a sweep of ``[tau, L]`` the smallest principal
    angle between ``V^u(0)`` and ``E^s(0, tau')`` must exceed ``angle_tol``.
    """
    if not (u1.span[0] <= tau < wave.zmax):
        raise ValueError(f"tau={tau} outside ({u1.span[0]}, {wave.zmax})")
    mu = asymptotic_rates(params, 0.0)
    e = asymptotic_frame(params, 0.0)
    kp, _ = translation_scales(params, wave)
    b1 = u1.weighted(tau)
    b2 = wave.phi_prime(tau) * math.exp(-mu[1] * tau) / kp
    Vu = np.column_stack([e[2], e[3]])
    ts = np.linspace(tau, wave.zmax, sweep)
    units, _ = u1.sample(ts)
    worst = math.inf
    for t, x in zip(ts, units):
        ang = principal_angle(Vu, np.column_stack([x, wave.phi_prime(t)]))
        if ang < angle_tol:
            raise ConjugatePointError(
                f"tau too small: V^u(0) and E^s(0, {t:.6g}) nearly intersect (angle {ang:.2e})"
            )
        worst = min(worst, ang)
    return ReferencePlane(float(tau), b1, b2, True, worst)


# ---------------------------------------------------------------------------
# detection function
# ---------------------------------------------------------------------------


def detection_beta(ref: ReferencePlane, U: UnstablePlane, z: float, normalized: bool = False) -> float:
    """``beta(z)``; with ``normalized`` the unstable bundle enters with unit
    norm (a positive rescaling that keeps zeros and signs)."""
    x, ls = U.unit(z)
    b = pair(ref.two_vector, x)
    return b if normalized else b * math.exp(ls)


def beta_forms(ref: ReferencePlane, U: UnstablePlane, z: float) -> tuple[float, float]:
    """Normalised ``beta`` from the 4x4 determinant and from the symplectic
    2x2 form on reconstructed bases."""
    x, _ = U.unit(z)
    e1, e2 = plane_basis(x)
    return (quad_volume(ref.basis1, ref.basis2, e1, e2),
            symplectic_det(ref.basis1, ref.basis2, e1, e2))


def beta_trace(ref: ReferencePlane, U: UnstablePlane, zs) -> tuple[np.ndarray, np.ndarray]:
    """Normalised ``beta`` and the unstable log scale on ``zs``."""
    X, ls = U.sample(zs)
    W = ref.two_vector
    S = np.array([1.0, -1.0, 1.0, 1.0, -1.0, 1.0])
    return (X[:, ::-1] * S) @ W, ls


def scan_grid(U: UnstablePlane, z_lo: float, z_hi: float, density: int = 4, minimum: int = MIN_SCAN) -> np.ndarray:
    """Integrator steps in ``[z_lo, z_hi]`` subdivided ``density`` times,
    with at least ``minimum`` points."""
    zs = U.zs
    base = zs[(zs >= z_lo) & (zs <= z_hi)]
    base = np.unique(np.concatenate([[z_lo, z_hi], base]))
    t = np.arange(density) / density
    fine = (base[:-1, None] + np.diff(base)[:, None] * t[None, :]).ravel()
    fine = np.concatenate([fine, [z_hi]])
    if fine.size < minimum:
        fine = np.unique(np.concatenate([fine, np.linspace(z_lo, z_hi, minimum)]))
    return fine


# ---------------------------------------------------------------------------
# crossings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjugatePoint:
    zStar: float
    dim: int
    xiBasis: tuple
    gamma: object
    signature: int
    regular: bool
    u_hat: float = float("nan")
    beta_slope: float = float("nan")

    def to_dict(self) -> dict:
        g = self.gamma
        return {
            "z": self.zStar,
            "dim": self.dim,
            "gamma": g.tolist() if isinstance(g, np.ndarray) else g,
            "signature": self.signature,
            "regular": self.regular,
            "u": self.u_hat,
        }


def crossing_form(params: SystemParams, wave: WaveProfile, z: float, xi) -> float:
    """``omega(xi, A(0, z) xi)``."""
    xi = np.asarray(xi, dtype=float)
    return omega(xi, coefficient_matrix(params, wave, 0.0, z) @ xi)


def _crossing_matrix(params, wave, z, basis) -> np.ndarray:
    A = coefficient_matrix(params, wave, 0.0, z)
    G = np.array([[omega(a, A @ b) for b in basis] for a in basis])
    return 0.5 * (G + G.T)


def _classify(params, wave, z, Uplane: PlaneBasis, ref: ReferencePlane, beta_slope=float("nan"),
              force_dim: int | None = None, right_endpoint: bool = False) -> ConjugatePoint:
    try:
        dim, basis = plane_intersection(Uplane, ref.plane)
    except IrregularGeometryError as err:
        raise ConjugatePointError(f"ambiguous intersection at z={z:.10g}: {err}; adjust tau") from err
    if force_dim is not None and dim != force_dim:
        # a refined zero of beta must carry an intersection; take the
        # closest direction when the rank test is marginal
        if dim == 0 and force_dim == 1:
            Q = np.column_stack([Uplane.orthonormal(), -ref.plane.orthonormal()])
            _, _, Vt = np.linalg.svd(Q)
            xi = Uplane.orthonormal() @ Vt[-1][:2]
            basis = [xi / np.linalg.norm(xi)]
            dim = 1
    if dim == 0:
        raise ConjugatePointError(f"no intersection found at z={z:.10g}")
    u_hat = wave.uv(z)[0]
    if dim == 1:
        xi = basis[0]
        g = crossing_form(params, wave, z, xi)
        regular = abs(g) > REGULARITY_FLOOR * float(xi @ xi)
        if right_endpoint:
            sig = 1 if g > 0 else 0
        else:
            sig = int(np.sign(g))
        return ConjugatePoint(float(z), 1, (xi,), float(g), sig, bool(regular), u_hat, beta_slope)
    G = _crossing_matrix(params, wave, z, basis)
    ev = np.linalg.eigvalsh(G)
    regular = bool(np.min(np.abs(ev)) > REGULARITY_FLOOR)
    sig = int(np.sum(ev > 0)) if right_endpoint else int(np.sum(ev > 0) - np.sum(ev < 0))
    return ConjugatePoint(float(z), 2, tuple(basis), G, sig, regular, u_hat, beta_slope)


def find_conjugate_points(ref: ReferencePlane, params: SystemParams, wave: WaveProfile,
                          U: UnstablePlane, z_lo: float | None = None) -> list[ConjugatePoint]:
    """Interior conjugate points on ``(z_lo, tau)``.

    Sign changes of ``beta`` on a dense grid are refined with Brent's
    method; near-zero local minima without a sign change are tested for a
    two-dimensional intersection.  Every crossing is classified by the
    dimension of the intersection and its crossing form.
    """
    tau = ref.tau
    z_lo = U.span[0] if z_lo is None else z_lo
    zs = scan_grid(U, z_lo, tau)
    zs = zs[zs < tau]
    b, _ = beta_trace(ref, U, zs)
    scale = float(np.max(np.abs(b)))
    W = ref.two_vector

    def f(z):
        return pair(W, U.unit(z)[0])

    out = []
    for i in np.nonzero(b[:-1] * b[1:] < 0)[0]:
        zstar = brentq(f, zs[i], zs[i + 1], xtol=ZERO_XTOL, rtol=4 * np.finfo(float).eps)
        d = 1e-6 * max(1.0, abs(zstar))
        slope = (f(zstar + d) - f(zstar - d)) / (2 * d)
        x, _ = U.unit(zstar)
        cp = _classify(params, wave, zstar, PlaneBasis(*plane_basis(x)), ref, slope, force_dim=1)
        out.append(cp)
    # tangential zeros: |beta| and |beta'| both tiny without a sign change
    ab = np.abs(b)
    for i in range(1, b.size - 1):
        if ab[i] <= ab[i - 1] and ab[i] <= ab[i + 1] and b[i - 1] * b[i + 1] > 0 and ab[i] < 1e3 * BETA_2D * scale:
            res = minimize_scalar(lambda z: abs(f(z)), bounds=(zs[i - 1], zs[i + 1]), method="bounded",
                                  options={"xatol": ZERO_XTOL})
            zc = float(res.x)
            d = 1e-6 * max(1.0, abs(zc))
            slope = (f(zc + d) - f(zc - d)) / (2 * d)
            if abs(f(zc)) < BETA_2D * scale and abs(slope) < DBETA_2D * scale:
                x, _ = U.unit(zc)
                out.append(_classify(params, wave, zc, PlaneBasis(*plane_basis(x)), ref, slope))
    out.sort(key=lambda cp: cp.zStar)
    bad = [cp for cp in out if not cp.regular]
    if bad:
        raise ConjugatePointError(
            f"irregular crossing at z={bad[0].zStar:.10g} (crossing form {bad[0].gamma}); perturb tau"
        )
    return out


def endpoint_crossing(ref: ReferencePlane, params: SystemParams, wave: WaveProfile, U: UnstablePlane) -> ConjugatePoint:
    """The forced crossing at ``tau`` (``phi'(tau)`` lies in both planes)."""
    x, _ = U.unit(ref.tau)
    cp = _classify(params, wave, ref.tau, PlaneBasis(*plane_basis(x)), ref, force_dim=1, right_endpoint=True)
    if not cp.regular:
        raise ConjugatePointError(f"irregular crossing at tau={ref.tau:.10g}; perturb tau")
    return cp


@dataclass(frozen=True)
class MaslovResult:
    tau: float
    crossings: list
    endpoint: ConjugatePoint
    index: int
    parityPrediction: int
    beta_slope_tau: float = float("nan")
    omega_phi_tau: float = float("nan")
    beta_minus_inf: float = float("nan")
    rho: float = float("nan")
    extras: dict = field(default_factory=dict, compare=False)

    def signatures(self) -> list[int]:
        return [cp.signature for cp in self.crossings] + [self.endpoint.signature]


def maslov_index(crossings: list[ConjugatePoint], endpoint: ConjugatePoint, tau: float | None = None,
                 **extras) -> MaslovResult:
    """Sum of interior signatures plus the endpoint's ``n_+``."""
    for cp in crossings + [endpoint]:
        if not cp.regular:
            raise ConjugatePointError(f"irregular crossing at z={cp.zStar:.10g}; index undefined")
    index = int(sum(cp.signature for cp in crossings) + endpoint.signature)
    return MaslovResult(endpoint.zStar if tau is None else tau, list(crossings), endpoint, index,
                        1 if index % 2 == 0 else -1, **extras)


def maslov_analysis(params: SystemParams, wave: WaveProfile, u1: SolutionTrajectory, U: UnstablePlane,
                    tau: float, validate: bool = True) -> MaslovResult:
    """Reference plane, interior crossings, endpoint and the index."""
    ref = reference_plane(params, wave, u1, tau) if validate else _unvalidated(params, wave, u1, tau)
    crossings = find_conjugate_points(ref, params, wave, U)
    end = endpoint_crossing(ref, params, wave, U)
    W = ref.two_vector
    d = 1e-4 * max(1.0, abs(tau))
    slope = (pair(W, U.unit(tau + d)[0]) - pair(W, U.unit(tau - d)[0])) / (2 * d)
    phi = wave.phi_prime(tau)
    A = coefficient_matrix(params, wave, 0.0, tau)
    om = omega(phi, A @ phi) * math.exp(params.c * tau)
    z0 = U.span[0]
    x0, ls0 = U.unit(z0)
    rho = asymptotic_frame(params, 0.0)[4]
    return maslov_index(crossings, end, tau, beta_slope_tau=float(slope), omega_phi_tau=float(om),
                        beta_minus_inf=float(pair(W, x0) * math.exp(ls0)), rho=float(rho),
                        extras={"reference_min_angle": ref.min_angle})


def _unvalidated(params, wave, u1, tau):
    mu = asymptotic_rates(params, 0.0)
    kp, _ = translation_scales(params, wave)
    b2 = wave.phi_prime(tau) * math.exp(-mu[1] * tau) / kp
    return ReferencePlane(float(tau), u1.weighted(tau), b2, False, float("nan"))


def parity_check(result: MaslovResult, lt: float, transversality: float | None = None,
                 floor: float = 1e-8) -> tuple[bool, dict]:
    """``(-1)^index == sign(lt)``, with the slope of ``beta`` at ``tau``
    compared against the sign of ``lt * omega(phi', phi'') e^{c tau}``."""
    if lt == 0 or (transversality is not None and transversality < floor):
        raise ConjugatePointError("non-transverse construction suspected: invariant below noise floor")
    lt_sign = 1 if lt > 0 else -1
    consistent = result.parityPrediction == lt_sign
    slope_sign = int(np.sign(result.beta_slope_tau))
    product_sign = int(np.sign(lt * result.omega_phi_tau))
    interior_odd = len([cp for cp in result.crossings if cp.dim == 1]) % 2 == 1
    detail = {
        "index": result.index,
        "parity": result.parityPrediction,
        "lt_sign": lt_sign,
        "beta_slope_sign": slope_sign,
        "beta_slope_product_sign": product_sign,
        "beta_slope_matches": slope_sign == product_sign,
        "slope_odd_rule": (slope_sign > 0) == interior_odd,
    }
    return consistent, detail
