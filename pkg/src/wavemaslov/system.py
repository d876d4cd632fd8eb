"""The two-component activator-inhibitor system and its linearisation.

The reaction-diffusion system is

    u_t = u_xx + f(u) - sigma v,      v_t = v_xx + g(v) + alpha u,

and a travelling wave with speed ``c < 0`` solves the first-order system

    u' = sigma w,  v' = alpha y,
    w' = -c w - f(u)/sigma + v,  y' = -c y - u - g(v)/alpha.

The eigenvalue problem along a wave is ``Y' = A(lambda, z) Y``.  This module
builds ``A``, its limit ``A_inf``, the induced matrix on the second exterior
power, and the asymptotic rates and eigenvectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .exterior import quad_volume


class ParameterError(ValueError):
    """Raised for parameters outside the supported regime."""


# ---------------------------------------------------------------------------
# kinetics
# ---------------------------------------------------------------------------


class Kinetics:
    """Reaction terms ``f, g`` with derivatives and coupling constants.

    Subclasses implement ``f, df, g, dg``; all accept scalars or arrays.
    """

    sigma: float
    alpha: float

    def f(self, u):
        raise NotImplementedError

    def df(self, u):
        raise NotImplementedError

    def g(self, v):
        raise NotImplementedError

    def dg(self, v):
        raise NotImplementedError

    def g_over_alpha(self, v):
        """``g(v)/alpha``; overridden where a cancellation is exact."""
        return self.g(v) / self.alpha

    def dg_over_alpha(self, v):
        return self.dg(v) / self.alpha

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FhnKinetics(Kinetics):
    """FitzHugh-Nagumo kinetics ``f = u(1-u)(u-a)``, ``g = -eps gamma v``,
    with ``sigma = 1`` and ``alpha = eps``."""

    a: float
    eps: float
    gamma: float = 0.0

    @property
    def sigma(self) -> float:
        return 1.0

    @property
    def alpha(self) -> float:
        return self.eps

    def f(self, u):
        return u * (1.0 - u) * (u - self.a)

    def df(self, u):
        return -self.a + 2.0 * (1.0 + self.a) * u - 3.0 * u * u

    def g(self, v):
        return -self.eps * self.gamma * v

    def dg(self, v):
        return -self.eps * self.gamma + 0.0 * v

    def g_over_alpha(self, v):
        return -self.gamma * v

    def dg_over_alpha(self, v):
        return -self.gamma + 0.0 * v

    def describe(self) -> dict:
        return {"preset": "fhn", "a": self.a, "eps": self.eps, "gamma": self.gamma}


@dataclass(frozen=True)
class PolynomialKinetics(Kinetics):
    """Kinetics given by coefficient lists (lowest degree first)."""

    f_coeffs: tuple
    g_coeffs: tuple
    sigma: float = 1.0
    alpha: float = 1.0
    _fp: Polynomial = field(init=False, repr=False, compare=False)
    _gp: Polynomial = field(init=False, repr=False, compare=False)
    _dfp: Polynomial = field(init=False, repr=False, compare=False)
    _dgp: Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "f_coeffs", tuple(float(x) for x in self.f_coeffs))
        object.__setattr__(self, "g_coeffs", tuple(float(x) for x in self.g_coeffs))
        object.__setattr__(self, "_fp", Polynomial(self.f_coeffs))
        object.__setattr__(self, "_gp", Polynomial(self.g_coeffs))
        object.__setattr__(self, "_dfp", self._fp.deriv())
        object.__setattr__(self, "_dgp", self._gp.deriv())
        if not (self.sigma > 0 and self.alpha > 0):
            raise ParameterError("sigma and alpha must be positive")

    def f(self, u):
        return self._fp(u)

    def df(self, u):
        return self._dfp(u)

    def g(self, v):
        return self._gp(v)

    def dg(self, v):
        return self._dgp(v)

    def describe(self) -> dict:
        return {
            "preset": "custom",
            "f": list(self.f_coeffs),
            "g": list(self.g_coeffs),
            "sigma": self.sigma,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class SystemParams:
    """Kinetics together with a wave speed ``c``."""

    kinetics: Kinetics
    c: float

    @property
    def sigma(self) -> float:
        return self.kinetics.sigma

    @property
    def alpha(self) -> float:
        return self.kinetics.alpha

    def with_speed(self, c: float) -> "SystemParams":
        return SystemParams(self.kinetics, float(c))


def rest_jacobian(params: SystemParams) -> np.ndarray:
    """``DF(0)`` of the kinetics ``(f(u) - sigma v, g(v) + alpha u)``."""
    k = params.kinetics
    return np.array([[float(k.df(0.0)), -k.sigma], [k.alpha, float(k.dg(0.0))]])


def turing_check(params: SystemParams) -> bool:
    """True iff ``trace DF(0) < 0`` and ``det DF(0) > 0``."""
    M = rest_jacobian(params)
    return bool(np.trace(M) < 0 and np.linalg.det(M) > 0)


def rest_eigenvalues(params: SystemParams) -> tuple[float, float]:
    """Eigenvalues ``nu1 < nu2 < 0`` of ``DF(0)``.

    Raises ``ParameterError`` when they are complex, repeated or not negative,
    since the rates of ``A_inf`` are then not real and simple.
    """
    M = rest_jacobian(params)
    tr, det = np.trace(M), np.linalg.det(M)
    disc = tr * tr - 4.0 * det
    if disc < 0:
        raise ParameterError("oscillatory tails unsupported: DF(0) has complex eigenvalues")
    if disc == 0:
        raise ParameterError("DF(0) has a repeated eigenvalue")
    r = np.sqrt(disc)
    # stable evaluation of both roots
    q = 0.5 * (tr + np.copysign(r, tr))
    nu = sorted([q, det / q])
    if nu[1] >= 0:
        raise ParameterError("rest state is not linearly stable")
    return float(nu[0]), float(nu[1])


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


def matrix_at(params: SystemParams, lam: float, u: float, v: float) -> np.ndarray:
    """``A(lambda)`` evaluated at the wave state ``(u, v)``."""
    k = params.kinetics
    s, a, c = k.sigma, k.alpha, params.c
    return np.array(
        [
            [0.0, 0.0, s, 0.0],
            [0.0, 0.0, 0.0, a],
            [(lam - float(k.df(u))) / s, 1.0, -c, 0.0],
            [-1.0, (lam - float(k.dg(v))) / a, 0.0, -c],
        ]
    )


def coefficient_matrix(params: SystemParams, wave, lam: float, z: float) -> np.ndarray:
    """``A(lambda, z)`` along ``wave`` (any object with ``uv(z)``)."""
    u, v = wave.uv(z)
    return matrix_at(params, lam, u, v)


def asymptotic_matrix(params: SystemParams, lam: float) -> np.ndarray:
    """The limit ``A_inf(lambda)`` at the rest state."""
    return matrix_at(params, lam, 0.0, 0.0)


def induced_at(params: SystemParams, lam: float, u: float, v: float) -> np.ndarray:
    """The 6x6 matrix of the induced system on Plücker coordinates."""
    k = params.kinetics
    s, a, c = k.sigma, k.alpha, params.c
    P = (lam - float(k.df(u))) / s
    Q = (lam - float(k.dg(v))) / a
    return np.array(
        [
            [0.0, 0.0, a, -s, 0.0, 0.0],
            [1.0, -c, 0.0, 0.0, 0.0, 0.0],
            [Q, 0.0, -c, 0.0, 0.0, s],
            [-P, 0.0, 0.0, -c, 0.0, -a],
            [1.0, 0.0, 0.0, 0.0, -c, 0.0],
            [0.0, 1.0, P, -Q, 1.0, -2.0 * c],
        ]
    )


def induced_matrix(params: SystemParams, wave, lam: float, z: float) -> np.ndarray:
    u, v = wave.uv(z)
    return induced_at(params, lam, u, v)


def char_poly_coeffs(params: SystemParams, lam) -> list:
    """Coefficients (highest degree first) of ``det(t I - A_inf(lambda))``."""
    k = params.kinetics
    a, b = float(k.df(0.0)), float(k.dg(0.0))
    c, sa = params.c, k.sigma * k.alpha
    return [
        1.0,
        2.0 * c,
        c * c + a + b - 2.0 * lam,
        c * (a + b - 2.0 * lam),
        a * b - lam * (a + b) + lam * lam + sa,
    ]


# ---------------------------------------------------------------------------
# asymptotic data
# ---------------------------------------------------------------------------


def asymptotic_rates(params: SystemParams, lam: float) -> np.ndarray:
    """Ascending rates ``mu1 < mu2 < mu3 < mu4`` of ``A_inf(lambda)``.

    ``mu = -c/2 -+ sqrt(c^2 + 4 (lambda - nu_i)) / 2``; requires ``lambda > nu2``.
    """
    nu1, nu2 = rest_eigenvalues(params)
    if not lam > nu2:
        raise ParameterError(f"lambda={lam} outside real-rate window (needs > {nu2})")
    c = params.c
    r1 = 0.5 * np.sqrt(c * c + 4.0 * (lam - nu1))
    r2 = 0.5 * np.sqrt(c * c + 4.0 * (lam - nu2))
    return np.array([-c / 2 - r1, -c / 2 - r2, -c / 2 + r2, -c / 2 + r1])


def _null_vector(M: np.ndarray) -> np.ndarray:
    _, _, Vt = np.linalg.svd(M)
    return Vt[-1]


def _fix_sign(x: np.ndarray) -> np.ndarray:
    for comp in x:
        if abs(comp) > 1e-3:
            return x if comp > 0 else -x
    return x


def asymptotic_frame(params: SystemParams, lam: float):
    """Unit eigenvectors ``eta1..eta4`` of ``A_inf(lambda)`` and ``rho``.

    Each vector has its first component of magnitude above 1e-3 made
    positive; ``eta4`` is then flipped if needed so that
    ``rho = det[eta1, eta2, eta3, eta4] > 0``.
    """
    mu = asymptotic_rates(params, lam)
    if np.min(np.diff(mu)) < 1e-8:
        raise ParameterError("non-simple rates")
    A = asymptotic_matrix(params, lam)
    etas = [_fix_sign(_null_vector(A - m * np.eye(4))) for m in mu]
    rho = quad_volume(*etas)
    if rho < 0:
        etas[3] = -etas[3]
        rho = -rho
    return etas[0], etas[1], etas[2], etas[3], float(rho)


def lambda_window(params: SystemParams) -> float:
    """Default ``delta = -nu2/2`` so all rates are real and simple on ``[-delta, inf)``."""
    nu1, nu2 = rest_eigenvalues(params)
    if not nu1 < nu2:
        raise ParameterError("nu1 == nu2 violates simple rates")
    return -0.5 * nu2


@dataclass(frozen=True)
class AsymptoticData:
    """Rest-state eigenvalues and the window ``I = [-delta, inf)``."""

    params: SystemParams
    nu1: float
    nu2: float
    delta: float

    def mu(self, lam: float) -> np.ndarray:
        return asymptotic_rates(self.params, lam)

    def eta(self, lam: float):
        return asymptotic_frame(self.params, lam)[:4]

    def rho(self, lam: float) -> float:
        return asymptotic_frame(self.params, lam)[4]


def asymptotic_data(params: SystemParams) -> AsymptoticData:
    nu1, nu2 = rest_eigenvalues(params)
    return AsymptoticData(params, nu1, nu2, lambda_window(params))


# ---------------------------------------------------------------------------
# essential spectrum
# ---------------------------------------------------------------------------


def default_kmax(params: SystemParams) -> float:
    k = params.kinetics
    a, b = float(k.df(0.0)), float(k.dg(0.0))
    return 10.0 * max(1.0, np.sqrt(abs(a) + abs(b) + k.sigma * k.alpha + params.c ** 2))


def dispersion_lambdas(params: SystemParams, k) -> np.ndarray:
    """The two ``lambda`` with ``det(i k - A_inf(lambda)) = 0``, per wavenumber.

    The characteristic polynomial is quadratic in ``lambda``; its coefficients
    follow from the real and imaginary parts at ``t = i k``.
    """
    kin = params.kinetics
    a, b = float(kin.df(0.0)), float(kin.dg(0.0))
    c, sa = params.c, kin.sigma * kin.alpha
    k = np.atleast_1d(np.asarray(k, dtype=float))
    t = 1j * k
    # chi = lam^2 - lam (2 t^2 + 2 c t + a + b) + R(t)
    B = 2.0 * t * t + 2.0 * c * t + a + b
    R = t ** 4 + 2 * c * t ** 3 + (c * c + a + b) * t ** 2 + c * (a + b) * t + a * b + sa
    disc = np.sqrt(B * B - 4.0 * R + 0j)
    return np.stack([(B - disc) / 2.0, (B + disc) / 2.0], axis=-1)


def essential_spectrum_clearance(params: SystemParams, samples=None):
    """Sampled check that the essential spectrum sits in ``Re lambda < 0``.

    Returns ``(clear, K_estimate)`` with ``K_estimate`` the largest real part
    found along the dispersion curves (a sampled bound, not a certificate).
    """
    if samples is None:
        kmax = default_kmax(params)
        samples = np.linspace(-kmax, kmax, 4001)
    lams = dispersion_lambdas(params, samples)
    K = float(np.max(lams.real))
    return bool(K < 0.0), K
