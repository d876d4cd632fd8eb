"""FitzHugh-Nagumo specifics: parameters, the Nagumo front and the
singular homoclinic orbit used as a starting point for the full wave.

With ``f(u) = u(1-u)(u-a)``, ``g(v) = -eps gamma v``, ``sigma = 1`` and
``alpha = eps`` the travelling-wave system has ``v`` as its only slow
variable.  The singular orbit is assembled from a fast front at ``v = 0``,
slow motion up the right branch of the critical manifold ``v = f(u)``,
a fast back jump at the level ``v*`` where the cubic front speed equals
the front speed, and a slow return along the left branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import expit

from .system import FhnKinetics, ParameterError, SystemParams, rest_eigenvalues, turing_check

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class FhnParams:
    """FitzHugh-Nagumo parameters."""

    a: float = 0.25
    eps: float = 0.0005
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.a < 0.5:
            raise ParameterError(f"a={self.a} outside (0, 1/2)")
        if not self.eps > 0.0:
            raise ParameterError("eps must be positive")
        if self.gamma < 0.0:
            raise ParameterError("gamma must be non-negative")
        if not unique_rest_state(self.a, self.gamma):
            raise ParameterError("gamma too large: kinetics have more than one fixed point")

    @property
    def kinetics(self) -> FhnKinetics:
        return FhnKinetics(self.a, self.eps, self.gamma)

    def system(self, c: float) -> SystemParams:
        return SystemParams(self.kinetics, float(c))

    def to_dict(self) -> dict:
        return {"a": self.a, "eps": self.eps, "gamma": self.gamma}


def unique_rest_state(a: float, gamma: float) -> bool:
    """True iff ``f(u) = u/gamma``... i.e. ``u - gamma v = 0, f(u) = v`` has
    only the root ``u = 0`` (for ``gamma = 0`` this always holds)."""
    if gamma == 0.0:
        return True
    # nonzero roots of (1-u)(u-a) = 1/gamma: u^2 - (1+a) u + a + 1/gamma = 0
    disc = (1.0 + a) ** 2 - 4.0 * (a + 1.0 / gamma)
    return bool(disc < 0.0)


def cubic(a: float):
    return lambda u: u * (1.0 - u) * (u - a)


def cubic_roots(a: float, v: float) -> np.ndarray:
    """Sorted real roots of ``f(u) = v`` (three of them for ``0 <= v < f(u_max)``)."""
    r = np.roots([-1.0, 1.0 + a, -a, -v])
    r = np.sort(r.real[np.abs(r.imag) < 1e-9])
    return r


def local_max_level(a: float) -> float:
    """Height of the local maximum of ``f`` (the right knee of the cubic)."""
    um = ((1.0 + a) + np.sqrt((1.0 + a) ** 2 - 3.0 * a)) / 3.0
    return float(cubic(a)(um))


def front_speed_cubic(a: float, v: float) -> float:
    """Speed of the front from the right root back to the left root of
    ``f(u) - v``.

    Writing the roots as ``u1 < u2 < u3`` with ``Delta = u3 - u1`` and
    ``a' = (u2 - u1)/Delta``, the rescaled cubic is a Nagumo nonlinearity and
    the speed is ``sqrt(2) Delta (1/2 - a')``.
    """
    u1, u2, u3 = cubic_roots(a, v)
    D = u3 - u1
    ap = (u2 - u1) / D
    return float(SQRT2 * D * (0.5 - ap))


@dataclass(frozen=True)
class NagumoFront:
    """Closed-form front of ``u'' + c u' + f(u) = 0`` from 0 to 1."""

    a: float
    c: float

    def u(self, z):
        return expit(np.asarray(z, dtype=float) / SQRT2)

    def du(self, z):
        u = self.u(z)
        return u * (1.0 - u) / SQRT2

    def ddu(self, z):
        u = self.u(z)
        return (1.0 - 2.0 * u) * u * (1.0 - u) / 2.0

    def w_of_u(self, u):
        """Front as a graph ``w(u) = u' = (sqrt(2)/2) u (1-u)``."""
        return SQRT2 / 2.0 * u * (1.0 - u)

    def residual(self, z) -> np.ndarray:
        return self.ddu(z) + self.c * self.du(z) + cubic(self.a)(self.u(z))


def nagumo_front(a: float) -> tuple[float, NagumoFront]:
    """Speed ``c* = sqrt(2)(a - 1/2)`` and the front with ``u(0) = 1/2``."""
    if not 0.0 < a < 0.5:
        raise ParameterError(f"a={a} outside (0, 1/2)")
    c = float(SQRT2 * (a - 0.5))
    return c, NagumoFront(a, c)


def back_jump_level(a: float, c: float | None = None, tol: float = 1e-12) -> float:
    """Level ``v*`` at which the back front moves with the front speed.

    Found by bisection on ``front_speed_cubic(a, v) = c`` over ``(0, f_max)``.
    """
    if c is None:
        c = nagumo_front(a)[0]
    vmax = local_max_level(a)
    lo, hi = 1e-14, vmax * (1.0 - 1e-9)
    flo = front_speed_cubic(a, lo) - c
    fhi = front_speed_cubic(a, hi) - c
    if flo * fhi > 0:
        raise ParameterError("back jump not found: no level with matching front speed")
    return float(brentq(lambda v: front_speed_cubic(a, v) - c, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))


@dataclass(frozen=True)
class SingularOrbit:
    """The singular homoclinic orbit as a concatenation of fast and slow pieces.

    Positions along ``z`` are measured in the fast variable: the front sits
    at ``z = 0`` and the back jump at ``z = zb`` (the duration of the slow
    right piece divided by ``eps``).
    """

    params: FhnParams
    c: float
    front: NagumoFront
    landing: np.ndarray
    v_star: float
    zb: float
    slow_right: object  # OdeSolution v(z) on [0, zb]
    back_roots: tuple
    slow_left: object  # OdeSolution v(z - zb) on [0, inf)
    slow_left_span: float

    @property
    def q(self) -> np.ndarray:
        u3 = self.back_roots[2]
        return np.array([u3, self.v_star, 0.0, (self.params.gamma * self.v_star - u3) / self.c])

    def endpoint_mismatch(self) -> float:
        """Largest gap between consecutive pieces at their junctions."""
        g, c = self.params.gamma, self.c
        front_end = np.array([1.0, 0.0, 0.0, -1.0 / c])
        vR0 = float(self.slow_right.sol(0.0)[0])
        uR0 = cubic_roots(self.params.a, vR0)[-1]
        slow_start = np.array([uR0, vR0, 0.0, (g * vR0 - uR0) / c])
        vR1 = float(self.slow_right.sol(self.zb)[0])
        uR1 = cubic_roots(self.params.a, vR1)[-1]
        slow_end = np.array([uR1, vR1, 0.0, (g * vR1 - uR1) / c])
        u1 = self.back_roots[0]
        back_end = np.array([u1, self.v_star, 0.0, (g * self.v_star - u1) / c])
        vL0 = float(self.slow_left.sol(0.0)[0])
        uL0 = cubic_roots(self.params.a, vL0)[0]
        left_start = np.array([uL0, vL0, 0.0, (g * vL0 - uL0) / c])
        return float(
            max(
                np.max(np.abs(front_end - self.landing)),
                np.max(np.abs(slow_start - self.landing)),
                np.max(np.abs(slow_end - self.q)),
                np.max(np.abs(left_start - back_end)),
            )
        )

    def v_of_z(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        v = np.zeros_like(z)
        mid = (z >= 0) & (z <= self.zb)
        v[mid] = self.slow_right.sol(z[mid])[0]
        right = z > self.zb
        s = np.minimum(z[right] - self.zb, self.slow_left_span)
        v[right] = self.slow_left.sol(s)[0]
        return v

    def guess(self, z) -> np.ndarray:
        """Smooth phase-space guess ``(u, v, w, y)`` on the mesh ``z``.

        ``u`` blends the branch values with logistic fronts at 0 and ``zb``,
        ``w`` is its derivative and ``y`` the bounded solution of
        ``y' = -c y - u + gamma v`` computed by a backward sweep.
        """
        z = np.asarray(z, dtype=float)
        a, g, c = self.params.a, self.params.gamma, self.c
        v = self.v_of_z(z)
        roots = np.array([cubic_roots(a, x) if x > 0 else np.array([0.0, a, 1.0]) for x in v])
        uL, uR = roots[:, 0], roots[:, 2]
        k_back = (self.back_roots[2] - self.back_roots[0]) / SQRT2
        s1 = expit(z / SQRT2)
        s2 = expit(-k_back * (z - self.zb))
        u = uL + (uR - uL) * s1 * s2
        w = np.gradient(u, z)
        src = u - g * v
        y = np.zeros_like(z)
        for i in range(z.size - 2, -1, -1):
            h = z[i + 1] - z[i]
            e = np.exp(c * h)
            y[i] = e * y[i + 1] + 0.5 * h * (src[i] + e * src[i + 1])
        return np.vstack([u, v, w, y])


def fhn_singular_orbit(p: FhnParams) -> SingularOrbit:
    """Assemble the singular orbit for ``p`` (speed ``c*`` of the Nagumo front)."""
    c, front = nagumo_front(p.a)
    if not turing_check(p.system(c)):
        raise ParameterError("rest state fails the Turing conditions")
    rest_eigenvalues(p.system(c))  # rejects oscillatory tails
    v_star = back_jump_level(p.a, c)
    a, g, eps = p.a, p.gamma, p.eps

    def right_rhs(z, v):
        u = cubic_roots(a, v[0])[-1] if v[0] > 0 else 1.0
        return [eps * (g * v[0] - u) / c]

    hit = lambda z, v: v[0] - v_star
    hit.terminal = True
    sol_r = solve_ivp(right_rhs, [0.0, 1e3 / eps], [0.0], events=hit, dense_output=True,
                      rtol=1e-11, atol=1e-14, method="DOP853")
    if sol_r.status != 1:
        raise ParameterError("slow flow on the right branch does not reach v*")
    zb = float(sol_r.t_events[0][0])
    back_roots = tuple(float(x) for x in cubic_roots(a, v_star))

    def left_rhs(z, v):
        u = cubic_roots(a, v[0])[0] if v[0] > 0 else v[0] * 0.0
        return [eps * (g * v[0] - u) / c]

    span = 60.0 / eps
    sol_l = solve_ivp(left_rhs, [0.0, span], [v_star], dense_output=True,
                      rtol=1e-11, atol=1e-16, method="DOP853")
    return SingularOrbit(
        params=p,
        c=c,
        front=front,
        landing=np.array([1.0, 0.0, 0.0, -1.0 / c]),
        v_star=v_star,
        zb=zb,
        slow_right=sol_r,
        back_roots=back_roots,
        slow_left=sol_l,
        slow_left_span=span,
    )
