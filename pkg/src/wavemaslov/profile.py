"""Sampled travelling-wave profiles.

A :class:`WaveProfile` stores ``u, v`` and their first two derivatives on a
strictly increasing grid over ``[-L, L]``.  Between nodes the components are
evaluated with quintic Hermite interpolation; beyond ``±L`` the profile is
continued along its exponential tail.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as _io
from .system import SystemParams, asymptotic_frame, asymptotic_rates

PROFILE_FIELDS = ("grid", "u", "v", "du", "dv", "ddu", "ddv")

#: default bound on |u(±L)| + |v(±L)|
TAIL_TOL = 1e-6
#: default bound on the finite-difference consistency of stored derivatives
FD_TOL = 1e-6


class ProfileError(ValueError):
    """Raised when a profile violates its schema or invariants."""


@dataclass(frozen=True)
class TailData:
    """Exponential tail rates and eigen-directions at ``λ = 0``."""

    mu_plus: float  # decay rate as z -> +inf (mu2(0) < 0)
    mu_minus: float  # growth rate seen from z -> -inf (mu3(0) > 0)
    eta_plus: np.ndarray
    eta_minus: np.ndarray

    @classmethod
    def from_params(cls, params: SystemParams) -> "TailData":
        mu = asymptotic_rates(params, 0.0)
        eta = asymptotic_frame(params, 0.0)
        return cls(float(mu[1]), float(mu[2]), eta[1], eta[2])


def _hermite5(t, h, y0, d0, s0, y1, d1, s1, order=0):
    """Quintic Hermite interpolant on one interval (value or derivatives)."""
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    if order == 0:
        H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
        H1 = t - 6 * t3 + 8 * t4 - 3 * t5
        H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5)
        H3 = 0.5 * (t3 - 2 * t4 + t5)
        H4 = -4 * t3 + 7 * t4 - 3 * t5
        H5 = 10 * t3 - 15 * t4 + 6 * t5
        return y0 * H0 + h * d0 * H1 + h * h * s0 * H2 + h * h * s1 * H3 + h * d1 * H4 + y1 * H5
    if order == 1:
        H0 = -30 * t2 + 60 * t3 - 30 * t4
        H1 = 1 - 18 * t2 + 32 * t3 - 15 * t4
        H2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4)
        H3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4)
        H4 = -12 * t2 + 28 * t3 - 15 * t4
        H5 = 30 * t2 - 60 * t3 + 30 * t4
        return (y0 * H0 + y1 * H5) / h + d0 * H1 + d1 * H4 + h * (s0 * H2 + s1 * H3)
    H0 = -60 * t + 180 * t2 - 120 * t3
    H1 = -36 * t + 96 * t2 - 60 * t3
    H2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3)
    H3 = 0.5 * (6 * t - 24 * t2 + 20 * t3)
    H4 = -24 * t + 84 * t2 - 60 * t3
    H5 = 60 * t - 180 * t2 + 120 * t3
    return (y0 * H0 + y1 * H5) / (h * h) + (d0 * H1 + d1 * H4) / h + s0 * H2 + s1 * H3


@dataclass(frozen=True)
class WaveProfile:
    """A homoclinic travelling-wave profile sampled on ``[-L, L]``."""

    grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    ddu: np.ndarray
    ddv: np.ndarray
    sigma: float
    alpha: float
    c: float
    tails: TailData | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in PROFILE_FIELDS:
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.grid.size
        if n < 2 or any(getattr(self, k).shape != (n,) for k in PROFILE_FIELDS):
            raise ProfileError("profile arrays must be one-dimensional with equal length >= 2")
        if not np.all(np.diff(self.grid) > 0):
            raise ProfileError("grid must be strictly increasing")
        # python-float copies for the scalar fast path
        object.__setattr__(self, "_zl", self.grid.tolist())
        object.__setattr__(self, "_uvl", [getattr(self, k).tolist() for k in ("u", "du", "ddu", "v", "dv", "ddv")])

    # -- basic geometry -------------------------------------------------
    @property
    def L(self) -> float:
        return float(max(-self.grid[0], self.grid[-1]))

    @property
    def zmin(self) -> float:
        return float(self.grid[0])

    @property
    def zmax(self) -> float:
        return float(self.grid[-1])

    def with_tails(self, params: SystemParams) -> "WaveProfile":
        return WaveProfile(
            self.grid, self.u, self.v, self.du, self.dv, self.ddu, self.ddv,
            self.sigma, self.alpha, self.c, TailData.from_params(params), dict(self.meta),
        )

    # -- evaluation -----------------------------------------------------
    def _interp(self, z, order=0):
        z = np.asarray(z, dtype=float)
        g = self.grid
        i = np.clip(np.searchsorted(g, z, side="right") - 1, 0, g.size - 2)
        h = g[i + 1] - g[i]
        t = (z - g[i]) / h
        out = []
        for y, d, s in ((self.u, self.du, self.ddu), (self.v, self.dv, self.ddv)):
            out.append(_hermite5(t, h, y[i], d[i], s[i], y[i + 1], d[i + 1], s[i + 1], order))
        return out

    def state(self, z):
        """``(u, v, du, dv, ddu, ddv)`` at ``z`` (arrays or scalars).

        Inside the grid the interpolant and its derivatives are returned;
        outside, :meth:`tail_extend` is used.
        """
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        res = np.empty((6, z.size))
        inside = (z >= self.grid[0]) & (z <= self.grid[-1])
        if np.any(inside):
            zi = z[inside]
            u, v = self._interp(zi, 0)
            du, dv = self._interp(zi, 1)
            ddu, ddv = self._interp(zi, 2)
            res[:, inside] = np.array([u, v, du, dv, ddu, ddv])
        for k in np.nonzero(~inside)[0]:
            res[:, k] = self.tail_extend(float(z[k]))
        return tuple(r[0] for r in res) if scalar else tuple(res)

    def uv(self, z: float) -> tuple[float, float]:
        """Fast scalar evaluation of ``(u(z), v(z))``."""
        zl = self._zl
        if z < zl[0] or z > zl[-1]:
            s = self.tail_extend(z)
            return s[0], s[1]
        i = bisect.bisect_right(zl, z) - 1
        if i >= len(zl) - 1:
            i = len(zl) - 2
        z0 = zl[i]
        h = zl[i + 1] - z0
        t = (z - z0) / h
        t3 = t * t * t
        t4 = t3 * t
        t5 = t4 * t
        H5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5
        H0 = 1.0 - H5
        H1 = h * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5)
        H4 = h * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5)
        hh = 0.5 * h * h
        H2 = hh * (t * t - 3.0 * t3 + 3.0 * t4 - t5)
        H3 = hh * (t3 - 2.0 * t4 + t5)
        U, dU, sU, V, dV, sV = self._uvl
        j = i + 1
        u = U[i] * H0 + dU[i] * H1 + sU[i] * H2 + sU[j] * H3 + dU[j] * H4 + U[j] * H5
        v = V[i] * H0 + dV[i] * H1 + sV[i] * H2 + sV[j] * H3 + dV[j] * H4 + V[j] * H5
        return u, v

    def phi(self, z) -> np.ndarray:
        """The wave as a point ``(u, v, u'/sigma, v'/alpha)`` of phase space."""
        u, v, du, dv, _, _ = self.state(z)
        return np.array([u, v, du / self.sigma, dv / self.alpha])

    def phi_prime(self, z) -> np.ndarray:
        """The translation mode ``(u', v', u''/sigma, v''/alpha)``."""
        _, _, du, dv, ddu, ddv = self.state(z)
        return np.array([du, dv, ddu / self.sigma, ddv / self.alpha])

    def tail_extend(self, z: float):
        """Exponential continuation beyond the grid.

        The stored end values are continued as ``value(±L) e^{mu (z ∓ L)}``
        with ``mu = mu2(0)`` on the right and ``mu3(0)`` on the left.
        """
        if self.tails is None:
            raise ProfileError("tail data not attached; call with_tails(params)")
        if z >= self.grid[-1]:
            k, mu = -1, self.tails.mu_plus
        elif z <= self.grid[0]:
            k, mu = 0, self.tails.mu_minus
        else:
            raise ValueError("tail_extend requires z outside the grid")
        fac = math.exp(mu * (z - self.grid[k]))
        return tuple(float(getattr(self, name)[k]) * fac for name in ("u", "v", "du", "dv", "ddu", "ddv"))

    # -- invariants -----------------------------------------------------
    def tail_size(self) -> float:
        return float(max(abs(self.u[0]) + abs(self.v[0]), abs(self.u[-1]) + abs(self.v[-1])))

    def fd_consistency(self) -> float:
        """Largest gap between stored first derivatives and three-point
        finite differences of ``u, v`` on interior nodes, relative to the
        largest stored derivative of the same component."""
        g = self.grid
        h0 = g[1:-1] - g[:-2]
        h1 = g[2:] - g[1:-1]
        worst = 0.0
        for y, d in ((self.u, self.du), (self.v, self.dv)):
            fd = (
                -h1 / (h0 * (h0 + h1)) * y[:-2]
                + (h1 - h0) / (h0 * h1) * y[1:-1]
                + h0 / (h1 * (h0 + h1)) * y[2:]
            )
            scale = float(np.max(np.abs(d)))
            if scale > 0:
                worst = max(worst, float(np.max(np.abs(fd - d[1:-1]))) / scale)
        return worst

    def validate(self, tail_tol: float = TAIL_TOL, fd_tol: float = FD_TOL) -> None:
        if not all(np.all(np.isfinite(getattr(self, k))) for k in PROFILE_FIELDS):
            raise ProfileError("profile contains non-finite values")
        if self.tail_size() >= tail_tol:
            raise ProfileError(
                f"tail tolerance violated: |u|+|v| at ±L is {self.tail_size():.3e} >= {tail_tol:.1e}"
            )
        fd = self.fd_consistency()
        if fd >= fd_tol:
            raise ProfileError(f"stored derivatives inconsistent with the grid (relative gap {fd:.3e})")

    # -- serialisation --------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "version": 1,
            "params": {"sigma": self.sigma, "alpha": self.alpha, "c": self.c},
            "L": self.L,
            **{k: self.__getattribute__(k) for k in PROFILE_FIELDS},
        }


def save_profile(w: WaveProfile, path) -> None:
    """Write ``w`` as JSON (17 significant digits, atomic)."""
    _io.atomic_write(path, _io.dumps(w.to_dict(), indent=0) + "\n")


def profile_from_dict(d: dict, params: SystemParams | None = None, validate: bool = True,
                      tail_tol: float = TAIL_TOL) -> WaveProfile:
    if not isinstance(d, dict):
        raise ProfileError("profile document must be a JSON object")
    for key in ("version", "params", "L", *PROFILE_FIELDS):
        if key not in d:
            raise ProfileError(f"profile schema violation: missing field '{key}'")
    if d["version"] != 1:
        raise ProfileError(f"unsupported profile version {d['version']!r}")
    p = d["params"]
    for key in ("sigma", "alpha", "c"):
        if key not in p:
            raise ProfileError(f"profile schema violation: missing field 'params.{key}'")
    arrays = {}
    for key in PROFILE_FIELDS:
        try:
            arrays[key] = np.array(d[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ProfileError(f"field '{key}' is not a numeric array") from exc
    n = arrays["grid"].size
    for key, arr in arrays.items():
        if arr.ndim != 1 or arr.size != n:
            raise ProfileError(f"field '{key}' has length {arr.size}, expected {n}")
    if not np.all(np.diff(arrays["grid"]) > 0):
        raise ProfileError("grid is not strictly increasing")
    w = WaveProfile(sigma=float(p["sigma"]), alpha=float(p["alpha"]), c=float(p["c"]), **arrays)
    if params is not None:
        w = w.with_tails(params)
    if validate:
        w.validate(tail_tol=tail_tol)
    return w


def load_profile(path, params: SystemParams | None = None, validate: bool = True,
                 tail_tol: float = TAIL_TOL) -> WaveProfile:
    """Read a profile written by :func:`save_profile`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"profile file not found: {path}")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile file {path} is not valid JSON: {exc}") from exc
    return profile_from_dict(d, params, validate, tail_tol)
