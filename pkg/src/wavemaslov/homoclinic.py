"""Homoclinic orbits of the travelling-wave system by collocation.

The truncated problem on ``[-L, L]`` is discretised with Hermite-Simpson
collocation (piecewise cubic Hermite, fourth order).  The unknowns are the
nodal states, the speed ``c`` and optionally one kinetic parameter ``s``.
Boundary conditions project the end states onto the unstable subspace of
``A_inf(0)`` at ``-L`` and the stable subspace at ``+L``; scalar pins fix
the translation (and, during continuation, a second front position).

The nonlinear system is solved by damped Newton iteration with a sparse
analytic Jacobian in the states; parameter columns use finite differences.
After convergence the mesh is bisected where the collocation defect or the
finite-difference consistency of the stored derivatives is too large.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicHermiteSpline

from .fhn import FhnParams, SingularOrbit, fhn_singular_orbit
from .profile import FD_TOL, TailData, WaveProfile
from .system import (
    Kinetics,
    ParameterError,
    SystemParams,
    asymptotic_matrix,
    asymptotic_rates,
)

log = logging.getLogger(__name__)


FAST_BRANCH_REL = 0.25


class SolverError(RuntimeError):
    """Newton iteration failed to converge."""

    def __init__(self, msg: str, residual: float = float("nan")):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class HomoclinicOptions:
    """Tuning knobs for :func:`solve_homoclinic`."""

    residual_tol: float = 1e-10
    max_iter: int = 40
    defect_tol: float = 1e-10
    fd_tol: float = FD_TOL
    tail_rel: float = 1e-8
    tail_tol: float = 1e-6
    max_refine: int = 12
    max_nodes: int = 400_000
    h_front: float = 0.05
    eps_rel_tol: float = 1e-7
    max_continuation: int = 60
    L: float | None = None


# ---------------------------------------------------------------------------
# vector field
# ---------------------------------------------------------------------------


def wave_rhs(Y: np.ndarray, c: float, k: Kinetics) -> np.ndarray:
    u, v, w, y = Y
    return np.array(
        [k.sigma * w, k.alpha * y, -c * w - k.f(u) / k.sigma + v, -c * y - u - k.g_over_alpha(v)]
    )


def wave_jac(Y: np.ndarray, c: float, k: Kinetics) -> np.ndarray:
    u, v = Y[0], Y[1]
    n = u.size
    J = np.zeros((n, 4, 4))
    J[:, 0, 2] = k.sigma
    J[:, 1, 3] = k.alpha
    J[:, 2, 0] = -k.df(u) / k.sigma
    J[:, 2, 1] = 1.0
    J[:, 2, 2] = -c
    J[:, 3, 0] = -1.0
    J[:, 3, 1] = -k.dg_over_alpha(v)
    J[:, 3, 3] = -c
    return J


def boundary_rows(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Row bases annihilating ``E^u`` (left end) and ``E^s`` (right end) of
    ``A_inf(0)``; computed from ordered real Schur forms so that complex
    intermediate iterates do not break the construction."""
    A = asymptotic_matrix(params, 0.0)
    split = -params.c / 2.0
    _, Zu, _ = sla.schur(A, sort=lambda x: x.real > split)
    _, Zs, _ = sla.schur(A, sort=lambda x: x.real < split)
    return Zu[:, 2:].T, Zs[:, 2:].T


# ---------------------------------------------------------------------------
# collocation problem
# ---------------------------------------------------------------------------


@dataclass
class _Problem:
    """A collocation system with free speed and optional free parameter."""

    z: np.ndarray
    family: Callable[[float], Kinetics]
    pins: list  # (kind, node index, value)
    free_s: bool

    def unpack(self, x):
        N = self.z.size
        Y = x[: 4 * N].reshape(N, 4).T
        c = x[4 * N]
        s = x[4 * N + 1] if self.free_s else None
        return Y, c, s

    def residual(self, Y, c, s, jac=True):
        z = self.z
        k = self.family(s)
        params = SystemParams(k, c)
        N = z.size
        h = np.diff(z)
        F = wave_rhs(Y, c, k)
        Ya, Yb, Fa, Fb = Y[:, :-1], Y[:, 1:], F[:, :-1], F[:, 1:]
        Ym = 0.5 * (Ya + Yb) - h / 8.0 * (Fb - Fa)
        Fm = wave_rhs(Ym, c, k)
        R = Yb - Ya - h / 6.0 * (Fa + 4.0 * Fm + Fb)
        Wu, Ws = boundary_rows(params)
        parts = [R.T.ravel(), Wu @ Y[:, 0], Ws @ Y[:, -1]]
        for kind, i, val in self.pins:
            if kind == "u":
                parts.append(np.array([Y[0, i] - val]))
            else:  # u'' = 0 at node i
                parts.append(np.array([F[2, i]]))
        res = np.concatenate(parts)
        if not jac:
            return res
        Jn = wave_jac(Y, c, k)
        Jm = wave_jac(Ym, c, k)
        I4 = np.eye(4)
        hh = h[:, None, None]
        dRa = -I4 - hh / 6.0 * (Jn[:-1] + 4.0 * Jm @ (0.5 * I4 + hh / 8.0 * Jn[:-1]))
        dRb = I4 - hh / 6.0 * (Jn[1:] + 4.0 * Jm @ (0.5 * I4 - hh / 8.0 * Jn[1:]))
        idx = np.arange(N - 1)
        rr = np.broadcast_to((4 * idx)[:, None, None] + np.arange(4)[None, :, None], (N - 1, 4, 4))
        cc = np.broadcast_to((4 * idx)[:, None, None] + np.arange(4)[None, None, :], (N - 1, 4, 4))
        rows = [rr.ravel(), rr.ravel()]
        cols = [cc.ravel(), (cc + 4).ravel()]
        vals = [dRa.ravel(), dRb.ravel()]
        r0 = 4 * (N - 1)
        for j in range(2):
            rows += [np.full(4, r0 + j), np.full(4, r0 + 2 + j)]
            cols += [np.arange(4), 4 * (N - 1) + np.arange(4)]
            vals += [Wu[j], Ws[j]]
        r0 += 4
        for j, (kind, i, _) in enumerate(self.pins):
            if kind == "u":
                rows.append(np.array([r0 + j]))
                cols.append(np.array([4 * i]))
                vals.append(np.array([1.0]))
            else:
                rows.append(np.full(4, r0 + j))
                cols.append(4 * i + np.arange(4))
                vals.append(Jn[i, 2])
        Jy = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(res.size, 4 * N),
        )
        # parameter columns by forward differences
        pcols = []
        dc = 1e-7 * max(1.0, abs(c))
        pcols.append((self.residual(Y, c + dc, s, jac=False) - res) / dc)
        if self.free_s:
            ds = 1e-6 * abs(s)
            pcols.append((self.residual(Y, c, s + ds, jac=False) - res) / ds)
        Jmat = sp.hstack([Jy, sp.csc_matrix(np.column_stack(pcols))], format="csc")
        return res, Jmat


def _newton(prob: _Problem, Y, c, s, tol, max_iter):
    N = prob.z.size
    x = np.concatenate([Y.T.ravel(), [c]] + ([[s]] if prob.free_s else []))
    res = None
    for it in range(max_iter + 1):
        Yc, cc, sc = prob.unpack(x)
        res, J = prob.residual(Yc, cc, sc)
        nr = float(np.max(np.abs(res)))
        log.debug("newton it=%d |res|=%.3e c=%.12f s=%s", it, nr, cc, sc)
        if nr < tol:
            return Yc.copy(), float(cc), (None if sc is None else float(sc)), it, nr
        if it == max_iter:
            break
        dx = spla.spsolve(J, -res)
        if not np.all(np.isfinite(dx)):
            raise SolverError("singular Newton matrix", nr)
        lam = 1.0
        while True:
            xn = x + lam * dx
            with np.errstate(all="ignore"):
                try:
                    rn = float(np.max(np.abs(prob.residual(*prob.unpack(xn), jac=False))))
                except (ValueError, np.linalg.LinAlgError):
                    rn = np.inf
            if np.isfinite(rn) and (rn < (1.0 - 0.25 * lam) * nr or rn < tol):
                break
            lam *= 0.5
            if lam < 1e-4:
                raise SolverError(f"Newton line search failed (|res|={nr:.3e})", nr)
        x = xn
    raise SolverError(f"Newton did not converge in {max_iter} iterations (|res|={nr:.3e})", nr)


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------


def _tail_nodes(start: float, end: float, h0: float, rate: float, hcap_rel: float = 0.05):
    """Nodes from ``start`` towards ``end`` (either direction): spacing
    ``h0`` growing geometrically, capped by ``hcap_rel/|rate|``."""
    sign = 1.0 if end > start else -1.0
    hcap = hcap_rel / abs(rate)
    nodes = []
    zc, h = start, h0
    while sign * (end - zc) > 1e-9:
        h = min(h * 1.08, hcap)
        zc = zc + sign * h
        if sign * (end - zc) < 0.5 * h:
            zc = end
        nodes.append(zc)
    if nodes:
        nodes[-1] = end
    return np.array(nodes)


def fhn_mesh(L: float, zb: float, h: float, mu_plus: float, mu_minus: float, pad: float = 30.0):
    """Mesh with spacing ``h`` on ``[-pad, zb + pad]`` (nodes at 0 and ``zb``)
    and graded tails; returns the mesh and the indices of 0 and ``zb``."""
    n1 = max(2, int(np.ceil(pad / h)) + 1)
    n2 = max(2, int(np.ceil(zb / h)) + 1)
    core = np.concatenate(
        [np.linspace(-pad, 0.0, n1), np.linspace(0.0, zb, n2)[1:], np.linspace(zb, zb + pad, n1)[1:]]
    )
    left = _tail_nodes(-pad, -L, h, mu_minus)[::-1]
    right = _tail_nodes(zb + pad, L, h, mu_plus)
    z = np.concatenate([left, core, right])
    return z, n1 - 1 + left.size, n1 - 1 + n2 - 1 + left.size


def _interp_state(z_old, Y_old, F_old, z_new):
    spl = CubicHermiteSpline(z_old, Y_old, F_old, axis=1)
    return spl(np.clip(z_new, z_old[0], z_old[-1]))


# ---------------------------------------------------------------------------
# refinement and profile assembly
# ---------------------------------------------------------------------------


def _defects(z, Y, c, k):
    """Per-interval collocation defect of the cubic Hermite interpolant."""
    F = wave_rhs(Y, c, k)
    h = np.diff(z)
    out = np.zeros(h.size)
    for t in (0.25, 0.75):
        h00 = 2 * t ** 3 - 3 * t ** 2 + 1
        h10 = t ** 3 - 2 * t ** 2 + t
        h01 = -2 * t ** 3 + 3 * t ** 2
        h11 = t ** 3 - t ** 2
        S = h00 * Y[:, :-1] + h10 * h * F[:, :-1] + h01 * Y[:, 1:] + h11 * h * F[:, 1:]
        d00 = (6 * t ** 2 - 6 * t) / h
        d10 = 3 * t ** 2 - 4 * t + 1
        d01 = (-6 * t ** 2 + 6 * t) / h
        d11 = 3 * t ** 2 - 2 * t
        dS = d00 * Y[:, :-1] + d10 * F[:, :-1] + d01 * Y[:, 1:] + d11 * F[:, 1:]
        out = np.maximum(out, h * np.max(np.abs(dS - wave_rhs(S, c, k)), axis=0))
    return out


def _fd_errors(z, Y, c, k):
    """Per-node finite-difference inconsistency of ``u', v'`` (relative)."""
    F = wave_rhs(Y, c, k)
    h0 = z[1:-1] - z[:-2]
    h1 = z[2:] - z[1:-1]
    err = np.zeros(z.size)
    for comp in (0, 1):
        y, d = Y[comp], F[comp]
        fd = -h1 / (h0 * (h0 + h1)) * y[:-2] + (h1 - h0) / (h0 * h1) * y[1:-1] + h0 / (h1 * (h0 + h1)) * y[2:]
        scale = np.max(np.abs(d))
        if scale > 0:
            err[1:-1] = np.maximum(err[1:-1], np.abs(fd - d[1:-1]) / scale)
    return err


def profile_from_solution(z, Y, params: SystemParams, meta=None) -> WaveProfile:
    k = params.kinetics
    F = wave_rhs(Y, params.c, k)
    return WaveProfile(
        grid=z, u=Y[0], v=Y[1], du=k.sigma * Y[2], dv=k.alpha * Y[3],
        ddu=k.sigma * F[2], ddv=k.alpha * F[3],
        sigma=k.sigma, alpha=k.alpha, c=params.c,
        tails=TailData.from_params(params), meta=dict(meta or {}),
    )


def _solve_refined(z, Y, c, kin: Kinetics, pin_index: int, opts: HomoclinicOptions):
    """Newton on ``z`` with the phase pin, then bisect until defect and
    finite-difference criteria hold; returns ``(z, Y, c, residual)``."""
    family = lambda s: kin
    nr = np.inf
    for _ in range(opts.max_refine + 1):
        prob = _Problem(z, family, [("phase", pin_index, 0.0)], False)
        Y, c, _, _, nr = _newton(prob, Y, c, None, opts.residual_tol, opts.max_iter)
        bad_int = _defects(z, Y, c, kin) > opts.defect_tol
        fd_bad = _fd_errors(z, Y, c, kin) > 0.5 * opts.fd_tol
        nodes = np.nonzero(fd_bad)[0]
        bad_int[np.clip(nodes - 1, 0, bad_int.size - 1)] = True
        bad_int[np.clip(nodes, 0, bad_int.size - 1)] = True
        if not np.any(bad_int):
            return z, Y, c, nr
        if z.size + int(bad_int.sum()) > opts.max_nodes:
            raise SolverError("mesh refinement exceeded max_nodes", nr)
        mids = 0.5 * (z[:-1] + z[1:])[bad_int]
        z_new = np.sort(np.concatenate([z, mids]))
        F = wave_rhs(Y, c, kin)
        Y = _interp_state(z, Y, F, z_new)
        pin_index = int(np.searchsorted(z_new, z[pin_index]))
        z = z_new
    raise SolverError("mesh refinement did not meet tolerances", nr)


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def _shift_to_phase(z, Y, c, kin):
    """Position of the maximum of ``u'`` (a zero of ``u''``), to be moved to
    ``z = 0``."""
    from scipy.optimize import brentq

    F = wave_rhs(Y, c, kin)
    dF = np.einsum("nij,jn->in", wave_jac(Y, c, kin), F)
    spl = CubicHermiteSpline(z, F[2], dF[2])
    i = int(np.argmax(Y[2]))
    for lo, hi in ((i - 1, i), (i, i + 1)):
        if 0 <= lo and hi < z.size and spl(z[lo]) * spl(z[hi]) <= 0:
            return float(brentq(spl, z[lo], z[hi], xtol=1e-14))
    return float(z[i])


def default_L(params: SystemParams, extent: float, tail_rel: float) -> float:
    mu = asymptotic_rates(params, 0.0)
    return float(extent + np.log(1.0 / tail_rel) / abs(mu[1]) + 30.0)


def _regrid_symmetric(z, Y, c, kin, zshift):
    """Shift a solution by ``zshift`` and restrict it to the largest
    symmetric window, inserting a node at ``z = 0``."""
    zs = z - zshift
    L = float(min(-zs[0], zs[-1]))
    inner = zs[(zs > -L) & (zs < L)]
    i0 = int(np.searchsorted(inner, 0.0))
    h_loc = np.min(np.diff(inner[max(i0 - 2, 0): i0 + 2])) if inner.size > 3 else 1.0
    inner = inner[np.abs(inner) > 0.25 * h_loc]
    z_new = np.unique(np.concatenate([[-L, 0.0, L], inner]))
    Y_new = _interp_state(zs, Y, wave_rhs(Y, c, kin), z_new)
    return z_new, Y_new, int(np.searchsorted(z_new, 0.0))


def solve_homoclinic(params: SystemParams, guess, opts: HomoclinicOptions | None = None):
    """Homoclinic orbit to the origin with the speed as an unknown.

    ``guess`` is a :class:`WaveProfile` (Newton from its nodal states) or a
    :class:`SingularOrbit` (continuation in the back-front position, see
    :func:`continue_from_singular`).  Returns ``(profile, c)``; the profile
    satisfies ``u''(0) = 0`` with ``u'`` maximal at ``z = 0``.
    """
    opts = opts or HomoclinicOptions()
    kin = params.kinetics
    if isinstance(guess, SingularOrbit):
        z, Y, c = continue_from_singular(guess, params, opts)
    elif isinstance(guess, WaveProfile):
        z = np.array(guess.grid)
        Y = np.vstack([guess.u, guess.v, guess.du / guess.sigma, guess.dv / guess.alpha])
        c = params.c if params.c else guess.c
    else:
        raise TypeError("guess must be a WaveProfile or SingularOrbit")
    zshift = _shift_to_phase(z, Y, c, kin)
    if zshift == 0.0 and np.any(z == 0.0):
        pin = int(np.nonzero(z == 0.0)[0][0])
    else:
        z, Y, pin = _regrid_symmetric(z, Y, c, kin, zshift)
    z, Y, c, nr = _solve_refined(z, Y, c, kin, pin, opts)
    sysp = SystemParams(kin, c)
    prof = profile_from_solution(z, Y, sysp, meta={"newton_residual": nr, "nodes": int(z.size)})
    if prof.tail_size() >= opts.tail_tol:
        raise SolverError(f"tail amplitude {prof.tail_size():.2e} exceeds tolerance; increase L", nr)
    return prof, c


def collocation_residual(profile: WaveProfile, params: SystemParams) -> float:
    """Largest Hermite-Simpson residual of ``profile`` on its own grid."""
    z = profile.grid
    Y = np.vstack([profile.u, profile.v, profile.du / profile.sigma, profile.dv / profile.alpha])
    prob = _Problem(z, lambda s: params.kinetics, [], False)
    res = prob.residual(Y, params.c, None, jac=False)
    return float(np.max(np.abs(res[: 4 * (z.size - 1)])))


def newton_steps_from(profile: WaveProfile, params: SystemParams, opts: HomoclinicOptions | None = None):
    """Number of Newton steps needed when ``profile`` is fed back as guess,
    and the resulting maximal change of the nodal states."""
    opts = opts or HomoclinicOptions()
    z = np.array(profile.grid)
    Y = np.vstack([profile.u, profile.v, profile.du / profile.sigma, profile.dv / profile.alpha])
    pin = int(np.argmin(np.abs(z)))
    prob = _Problem(z, lambda s: params.kinetics, [("phase", pin, 0.0)], False)
    Y2, c2, _, its, _ = _newton(prob, Y, params.c, None, opts.residual_tol, opts.max_iter)
    return its, float(np.max(np.abs(Y2 - Y))), c2


# ---------------------------------------------------------------------------
# FitzHugh-Nagumo continuation
# ---------------------------------------------------------------------------


def _fhn_family(p: FhnParams):
    from .system import FhnKinetics

    return lambda s: FhnKinetics(p.a, float(s), p.gamma)


def continue_from_singular(orbit: SingularOrbit, params: SystemParams, opts: HomoclinicOptions):
    """Bring the singular orbit to a solution of the full system.

    Newton from the singular orbit at fixed ``eps`` is poorly conditioned
    along the position of the back front.  Instead the problem is posed with
    two pins, ``u(0) = u(zb) = 1/2``, and both ``c`` and ``eps`` free.  For
    each ``zb`` this has a locally unique solution on the fast-pulse branch,
    and ``eps * zb`` is nearly constant along it, so a secant iteration in
    ``log zb`` reaches the requested ``eps``.  Returns ``(z, Y, c)`` at the
    target ``eps`` (pins still in place; the caller re-imposes the phase).
    """
    p = orbit.params
    target = p.eps
    family = _fhn_family(p)
    c = orbit.c
    sys0 = p.system(c)
    mu = asymptotic_rates(sys0, 0.0)
    zb = orbit.zb
    L = opts.L or default_L(sys0, 1.5 * zb, opts.tail_rel)

    def solve_at(zb_new, z_old=None, Y_old=None, c_old=None, s_old=None, zb_old=None, start=orbit):
        z, i0, ib = fhn_mesh(L, zb_new, opts.h_front, mu[1], mu[2])
        if z_old is None:
            Y = start.guess(z)
            c0, s0 = start.c, start.params.eps
        else:
            # stretch the interval between the fronts, shift the rest
            zs = np.where(z <= 0, z, np.where(z <= zb_new, z * zb_old / zb_new, z - zb_new + zb_old))
            Y = _interp_state(z_old, Y_old, wave_rhs(Y_old, c_old, family(s_old)), zs)
            c0, s0 = c_old, s_old
        prob = _Problem(z, family, [("u", i0, 0.5), ("u", ib, 0.5)], True)
        Yn, cn, sn, _, _ = _newton(prob, Y, c0, s0, opts.residual_tol, opts.max_iter)
        return z, Yn, cn, sn

    # The singular back-front position scales like 1/eps; for eps beyond the
    # fold it lies where only the slow-pulse branch exists.  Move the start
    # outward until the solution is a fast pulse (speed near c*).
    start = orbit
    for _ in range(8):
        try:
            z, Y, c, s = solve_at(start.zb, start=start)
            if abs(c - orbit.c) <= FAST_BRANCH_REL * abs(orbit.c):
                break
        except SolverError:
            c = float("nan")
        log.info("start zb=%.6f is not on the fast branch (c=%.6f); moving out", start.zb, c)
        start = fhn_singular_orbit(replace(start.params, eps=start.params.eps / 1.5))
    else:
        raise ParameterError("could not start continuation on the fast-pulse branch")
    zb = start.zb
    hist = [(zb, s)]
    log.info("continuation zb=%.6f eps=%.9g c=%.10f", zb, s, c)
    for _ in range(opts.max_continuation):
        if abs(s - target) <= opts.eps_rel_tol * target:
            break
        if len(hist) < 2:
            zb_new = zb * s / target
        else:
            (x0, e0), (x1, e1) = hist[-2], hist[-1]
            slope = (np.log(e1) - np.log(e0)) / (np.log(x1) - np.log(x0))
            if not slope < 0:
                raise ParameterError(
                    f"no fast pulse at eps={target}: the branch folds below it"
                    f" (largest eps reached {max(e for _, e in hist):.4g})"
                )
            zb_new = float(np.exp(np.log(x1) + (np.log(target) - np.log(e1)) / slope))
        zb_new = float(np.clip(zb_new, 0.8 * zb, 1.25 * zb))
        try:
            z, Y, c, s = solve_at(zb_new, z, Y, c, s, zb)
        except SolverError as err:
            raise ParameterError(
                f"no fast pulse at eps={target}: continuation broke down near the fold"
                f" (largest eps reached {max(e for _, e in hist):.4g})"
            ) from err
        zb = zb_new
        hist.append((zb, s))
        log.info("continuation zb=%.6f eps=%.9g c=%.10f", zb, s, c)
    else:
        raise ParameterError(f"continuation to eps={target} did not converge")
    # final Newton at the exact target eps with c free, keeping the u(0)=1/2 pin
    i0 = int(np.nonzero(z == 0.0)[0][0])
    prob = _Problem(z, lambda _s: params.kinetics, [("u", i0, 0.5)], False)
    Y, c, _, _, _ = _newton(prob, Y, c, None, opts.residual_tol, opts.max_iter)
    return z, Y, c
