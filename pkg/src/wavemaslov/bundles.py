"""Rescaled integration of the stable and unstable bundles.

Every trajectory is a solution ``X(z)`` of a linear system written as
``X(z) = exp(rate * z + s(z)) * x(z)`` where ``rate`` is the subtracted
asymptotic rate, ``s`` a log scale and ``x`` a unit vector.  The weighted
system ``x' = (M(z) - rate) x`` is advanced with DOP853 over chunks of
moderate length; at every chunk boundary the state is renormalised and the
norm is moved into the log scale.  This keeps every stored number O(1) even
when the weighted solution grows or decays by hundreds of e-folds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .exterior import grassmann_residual, lagrangian_residual, omega, wedge
from .profile import WaveProfile
from .system import SystemParams, asymptotic_frame, asymptotic_rates

RTOL = 1e-10
ATOL = 1e-12
CHUNK = 40.0


class IntegrationError(RuntimeError):
    """The adaptive integrator failed; the message names the location."""


class InvariantError(RuntimeError):
    """A quantity that should be constant along the wave drifted."""


@dataclass(frozen=True)
class Trajectory:
    """A rescaled solution with dense output.

    ``zs``/``values``/``log_scales`` hold the accepted integrator steps in
    ascending ``z``; ``values`` are unit vectors and the weighted solution is
    ``values * exp(log_scales)``.
    """

    kind: str
    lam: float
    direction: str
    weight_rate: float
    zs: np.ndarray
    values: np.ndarray
    log_scales: np.ndarray
    chunks: tuple = field(repr=False, compare=False)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.zs[0]), float(self.zs[-1])

    def _chunk(self, z: float):
        lo, hi = self.span
        if not (lo - 1e-9 <= z <= hi + 1e-9):
            raise ValueError(f"z={z} outside trajectory range [{lo}, {hi}]")
        for za, zb, sol, ls in self.chunks:
            if za - 1e-12 <= z <= zb + 1e-12:
                return sol, ls
        raise ValueError(f"z={z} not covered")  # pragma: no cover

    def unit(self, z: float) -> tuple[np.ndarray, float]:
        """Unit direction at ``z`` and the log of the weighted norm."""
        sol, ls = self._chunk(float(z))
        x = sol(float(z))
        n = float(np.linalg.norm(x))
        return x / n, ls + math.log(n)

    def sample(self, zs) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised :meth:`unit` over ascending or unsorted ``zs``."""
        zs = np.asarray(zs, dtype=float)
        starts = np.array([ch[0] for ch in self.chunks])
        idx = np.clip(np.searchsorted(starts, zs, side="right") - 1, 0, len(self.chunks) - 1)
        out = np.empty((zs.size, self.values.shape[1]))
        lss = np.empty(zs.size)
        for k in np.unique(idx):
            sel = idx == k
            _, _, sol, ls = self.chunks[k]
            X = np.atleast_2d(sol(zs[sel])).reshape(self.values.shape[1], -1)
            n = np.linalg.norm(X, axis=0)
            out[sel] = (X / n).T
            lss[sel] = ls + np.log(n)
        return out, lss

    def weighted(self, z: float) -> np.ndarray:
        x, ls = self.unit(z)
        return x * math.exp(ls)

    def unweighted(self, z: float) -> np.ndarray:
        x, ls = self.unit(z)
        return x * math.exp(ls + self.weight_rate * z)


class BundleTrajectory(Trajectory):
    """Plücker representative of ``E^u`` or ``E^s``."""

    def residuals(self) -> tuple[float, float]:
        """Largest Grassmann and Lagrangian residuals over the samples."""
        g = max(abs(grassmann_residual(T)) for T in self.values)
        l = max(abs(lagrangian_residual(T)) for T in self.values)
        return g, l


class SolutionTrajectory(Trajectory):
    """An individual solution of the first-order eigenvalue system."""


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------


def _bundle_rhs(params: SystemParams, wave: WaveProfile, lam: float, rate: float):
    k = params.kinetics
    s, a, c = k.sigma, k.alpha, params.c
    df, dg, uv = k.df, k.dg, wave.uv
    cr = c + rate

    def rhs(z, Z):
        u, v = uv(z)
        P = (lam - float(df(u))) / s
        Q = (lam - float(dg(v))) / a
        p12, p13, p14, p23, p24, p34 = Z
        return np.array(
            [
                a * p14 - s * p23 - rate * p12,
                p12 - cr * p13,
                Q * p12 - cr * p14 + s * p34,
                -P * p12 - cr * p23 - a * p34,
                p12 - cr * p24,
                p13 + P * p14 - Q * p23 + p24 - (2.0 * c + rate) * p34,
            ]
        )

    return rhs


def _vector_rhs(params: SystemParams, wave: WaveProfile, lam: float, rate: float):
    k = params.kinetics
    s, a, c = k.sigma, k.alpha, params.c
    df, dg, uv = k.df, k.dg, wave.uv
    cr = c + rate

    def rhs(z, Y):
        u, v = uv(z)
        p, q, r, w = Y
        return np.array(
            [
                s * r - rate * p,
                a * w - rate * q,
                (lam - float(df(u))) / s * p + q - cr * r,
                -p + (lam - float(dg(v))) / a * q - cr * w,
            ]
        )

    return rhs


def _integrate(rhs, y0, z0, z1, rate, kind, lam, cls, rtol=RTOL, atol=ATOL, chunk=CHUNK):
    y0 = np.asarray(y0, dtype=float)
    n0 = float(np.linalg.norm(y0))
    y, ls = y0 / n0, math.log(n0)
    sign = 1.0 if z1 >= z0 else -1.0
    chunks, zs, vals, lss = [], [], [], []
    za = z0
    while sign * (z1 - za) > 1e-12:
        zb = z1 if abs(z1 - za) <= chunk * 1.5 else za + sign * chunk
        sol = solve_ivp(rhs, (za, zb), y, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if sol.status != 0:
            raise IntegrationError(f"{kind} integration at lambda={lam} failed near z={sol.t[-1]:.6g}: {sol.message}")
        X = sol.y
        norms = np.linalg.norm(X, axis=0)
        if not np.all(np.isfinite(norms)) or norms.min() == 0.0:
            raise IntegrationError(f"{kind} integration at lambda={lam} lost its state near z={za:.6g}")
        zs.append(sol.t)
        vals.append((X / norms).T)
        lss.append(ls + np.log(norms))
        chunks.append((min(za, zb), max(za, zb), sol.sol, ls))
        y = X[:, -1] / norms[-1]
        ls += math.log(norms[-1])
        za = zb
    zs = np.concatenate(zs)
    vals = np.concatenate(vals)
    lss = np.concatenate(lss)
    if sign < 0:
        zs, vals, lss = zs[::-1], vals[::-1], lss[::-1]
        chunks = chunks[::-1]
    keep = np.concatenate([[True], np.diff(zs) > 0])
    return cls(kind, float(lam), "forward" if sign > 0 else "backward", float(rate),
               zs[keep], vals[keep], lss[keep], tuple(chunks))


# ---------------------------------------------------------------------------
# bundles and individual solutions
# ---------------------------------------------------------------------------


def unstable_bundle(params: SystemParams, wave: WaveProfile, lam: float, z_end: float = 0.0,
                    rtol: float = RTOL, atol: float = ATOL) -> BundleTrajectory:
    """``E^u(lambda, z)`` from ``-L`` up to ``z_end``, weighted by ``mu3+mu4``."""
    e1, e2, e3, e4, _ = asymptotic_frame(params, lam)
    mu = asymptotic_rates(params, lam)
    rate = float(mu[2] + mu[3])
    return _integrate(_bundle_rhs(params, wave, lam, rate), wedge(e3, e4), wave.zmin, z_end,
                      rate, "unstable", lam, BundleTrajectory, rtol, atol)


def stable_bundle(params: SystemParams, wave: WaveProfile, lam: float, z_end: float = 0.0,
                  rtol: float = RTOL, atol: float = ATOL) -> BundleTrajectory:
    """``E^s(lambda, z)`` from ``+L`` down to ``z_end``, weighted by ``mu1+mu2``."""
    e1, e2, e3, e4, _ = asymptotic_frame(params, lam)
    mu = asymptotic_rates(params, lam)
    rate = float(mu[0] + mu[1])
    return _integrate(_bundle_rhs(params, wave, lam, rate), wedge(e1, e2), wave.zmax, z_end,
                      rate, "stable", lam, BundleTrajectory, rtol, atol)


def strong_stable_solution(params: SystemParams, wave: WaveProfile, z_end: float | None = None,
                           rtol: float = RTOL, atol: float = ATOL) -> SolutionTrajectory:
    """``u1(0, z)``: backward from ``+L`` with ``e^{-mu1 z} u1 = eta1`` there.

    The anchor is ``eta1`` at ``z = L`` in weighted form, i.e. the stored
    weighted value at ``L`` is ``eta1 e^{-mu1 L}`` times ``e^{mu1 L}``.
    """
    e1 = asymptotic_frame(params, 0.0)[0]
    mu1 = float(asymptotic_rates(params, 0.0)[0])
    z_end = wave.zmin if z_end is None else z_end
    return _integrate(_vector_rhs(params, wave, 0.0, mu1), e1, wave.zmax, z_end,
                      mu1, "u1", 0.0, SolutionTrajectory, rtol, atol)


def strong_unstable_solution(params: SystemParams, wave: WaveProfile, z_end: float | None = None,
                             rtol: float = RTOL, atol: float = ATOL) -> SolutionTrajectory:
    """``u4(0, z)``: forward from ``-L`` anchored at ``eta4``."""
    e4 = asymptotic_frame(params, 0.0)[3]
    mu4 = float(asymptotic_rates(params, 0.0)[3])
    z_end = wave.zmax if z_end is None else z_end
    return _integrate(_vector_rhs(params, wave, 0.0, mu4), e4, wave.zmin, z_end,
                      mu4, "u4", 0.0, SolutionTrajectory, rtol, atol)


class _ProfileSolution:
    """Dense output for ``phi'`` read from the profile interpolant."""

    def __init__(self, wave: WaveProfile):
        self.wave = wave

    def __call__(self, z):
        return self.wave.phi_prime(z)


def translation_solution(wave: WaveProfile, params: SystemParams | None = None) -> SolutionTrajectory:
    """``phi'(z)`` assembled from the stored profile derivatives (rate 0)."""
    z = np.array(wave.grid)
    vals = np.vstack([wave.du, wave.dv, wave.ddu / wave.sigma, wave.ddv / wave.alpha]).T
    norms = np.linalg.norm(vals, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(norms[:, None] > 0, vals / norms[:, None], 0.0)
        ls = np.where(norms > 0, np.log(norms), -np.inf)
    chunk = (wave.zmin, wave.zmax, _ProfileSolution(wave), 0.0)
    return SolutionTrajectory("phiPrime", 0.0, "none", 0.0, z, unit, ls, (chunk,))


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


def omega_weighted_product(params: SystemParams, X: Trajectory, Y: Trajectory, z: float) -> float:
    """``e^{cz} omega(X(z), Y(z))`` for unweighted solutions, assembled in
    log space from the weighted representatives."""
    x, lx = X.unit(z)
    y, ly = Y.unit(z)
    e = params.c * z + X.weight_rate * z + Y.weight_rate * z + lx + ly
    return omega(x, y) * math.exp(e)


def omega_drift(params: SystemParams, X: Trajectory, Y: Trajectory, zs) -> tuple[float, float]:
    """Mean of ``e^{cz} omega(X, Y)`` over ``zs`` and its largest relative
    deviation."""
    vals = np.array([omega_weighted_product(params, X, Y, float(z)) for z in zs])
    mean = float(np.mean(vals))
    return mean, float(np.max(np.abs(vals - mean)) / abs(mean))


def lazutkin_treschev(params: SystemParams, u1: SolutionTrajectory, u4: SolutionTrajectory,
                      samples: int = 201, tol: float = 1e-6) -> tuple[float, float]:
    """``Omega(u1, u4)`` averaged over the middle half of the overlap.

    Since ``mu1 + mu4 = -c`` the exponential weights cancel, so the weighted
    representatives pair directly.  Returns ``(value, drift)`` and raises
    :class:`InvariantError` when the relative drift exceeds ``tol``.
    """
    lo = max(u1.span[0], u4.span[0])
    hi = min(u1.span[1], u4.span[1])
    if not hi > lo:
        raise ValueError("u1 and u4 trajectories do not overlap")
    q = 0.25 * (hi - lo)
    value, drift = omega_drift(params, u1, u4, np.linspace(lo + q, hi - q, samples))
    if drift > tol:
        raise InvariantError(f"Lazutkin-Treschev invariant drifts by {drift:.3e} (tolerance {tol:.1e})")
    return value, drift


def _tail_point(wave: WaveProfile, level: float, side: str) -> float:
    """Outermost grid point on ``side`` where ``|phi'|`` still exceeds
    ``level`` times its maximum."""
    mag = np.hypot(wave.du, wave.dv)
    idx = np.nonzero(mag > level * mag.max())[0]
    return float(wave.grid[idx[-1] if side == "right" else idx[0]])


def translation_scales(params: SystemParams, wave: WaveProfile,
                       right_level: float = 1e-8, left_level: float = 1e-8) -> tuple[float, float]:
    """Coefficients ``kappa_plus, kappa_minus`` with
    ``phi'(z) ~ kappa_plus e^{mu2 z} eta2`` as ``z -> +inf`` and
    ``phi'(z) ~ kappa_minus e^{mu3 z} eta3`` as ``z -> -inf``.

    They are read off where ``|phi'|`` has dropped to ``level`` times its
    peak.  On the right the tail leaves the nonlinear regime slowly (the
    estimate converges in proportion to the local amplitude), so the point
    must be far out; it must also stay well above the solver's absolute
    error, which the default 1e-8 satisfies for profiles built with the
    default truncation.
    """
    e1, e2, e3, e4, _ = asymptotic_frame(params, 0.0)
    mu = asymptotic_rates(params, 0.0)
    V = np.column_stack([e1, e2, e3, e4])
    zp = _tail_point(wave, right_level, "right")
    zm = _tail_point(wave, left_level, "left")
    kp = np.linalg.solve(V, wave.phi_prime(zp))[1] * math.exp(-mu[1] * zp)
    km = np.linalg.solve(V, wave.phi_prime(zm))[2] * math.exp(-mu[2] * zm)
    return float(kp), float(km)


@dataclass(frozen=True)
class UnstablePlane:
    """``E^u(0, z)`` over the whole line at ``lambda = 0``.

    Forward integration of the bundle is accurate only while ``E^u`` is the
    attracting plane of the induced flow; beyond the first front the plane
    ``span{phi', u4}`` is repelling and round-off takes over.  Left of
    ``z_switch`` the integrated bundle is used; from ``z_switch`` on the
    plane is rebuilt as ``e^{-mu3 z} phi'(z) / kappa_minus ^ e^{-mu4 z}
    u4(z)``, which has the same weighted normalisation (both tend to
    ``eta3 ^ eta4`` at ``-inf``).  ``mismatch`` records the relative jump
    between the two representatives at ``z_switch``.
    """

    bundle: BundleTrajectory
    u4: SolutionTrajectory
    wave: WaveProfile
    kappa_minus: float
    mu3: float
    z_switch: float
    mismatch: float

    @property
    def span(self) -> tuple[float, float]:
        return self.bundle.span[0], self.u4.span[1]

    @property
    def zs(self) -> np.ndarray:
        a = self.bundle.zs[self.bundle.zs < self.z_switch]
        b = self.u4.zs[self.u4.zs >= self.z_switch]
        return np.concatenate([a, b])

    def _right(self, zs, X4, l4):
        phi = self.wave.phi_prime(zs).reshape(4, -1).T
        T = np.array([wedge(p, x) for p, x in zip(phi, X4)])
        n = np.linalg.norm(T, axis=1)
        sgn = 1.0 if self.kappa_minus > 0 else -1.0
        ls = np.log(n) + l4 - self.mu3 * zs - math.log(abs(self.kappa_minus))
        return sgn * T / n[:, None], ls

    def sample(self, zs) -> tuple[np.ndarray, np.ndarray]:
        zs = np.atleast_1d(np.asarray(zs, dtype=float))
        out = np.empty((zs.size, 6))
        lss = np.empty(zs.size)
        left = zs < self.z_switch
        if np.any(left):
            out[left], lss[left] = self.bundle.sample(zs[left])
        if np.any(~left):
            X4, l4 = self.u4.sample(zs[~left])
            out[~left], lss[~left] = self._right(zs[~left], X4, l4)
        return out, lss

    def unit(self, z: float) -> tuple[np.ndarray, float]:
        X, ls = self.sample([z])
        return X[0], float(ls[0])


def unstable_plane(params: SystemParams, wave: WaveProfile, bundle: BundleTrajectory,
                   u4: SolutionTrajectory, z_switch: float = 0.0) -> UnstablePlane:
    """Combine a ``lambda = 0`` unstable bundle (reaching ``z_switch``) with
    ``u4`` and the translation mode."""
    if bundle.lam != 0.0 or bundle.span[1] < z_switch:
        raise ValueError("bundle must be at lambda=0 and reach z_switch")
    _, km = translation_scales(params, wave)
    mu3 = float(asymptotic_rates(params, 0.0)[2])
    plane = UnstablePlane(bundle, u4, wave, km, mu3, z_switch, 0.0)
    xb, lb = bundle.unit(z_switch)
    X4, l4 = u4.sample([z_switch])
    xr, lr = plane._right(np.array([z_switch]), X4, l4)
    mismatch = float(np.linalg.norm(xb * math.exp(lb - lr[0]) - xr[0]))
    return UnstablePlane(bundle, u4, wave, km, mu3, z_switch, mismatch)
