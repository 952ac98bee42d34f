"""Fixed-step method-of-steps integrator for delay differential equations.

The scheme is classical RK4 on the mesh ``tau + k h`` with cubic Hermite dense
output built from the stored states and derivatives. Delayed values are read
from the dense output of accepted steps or from the history. When a delayed
argument falls inside the step being taken (delays shorter than ``h``), the
step is resolved by a short fixed-point iteration on the end-of-step state.

States may carry leading batch axes: a state of shape ``(batch, dim)`` runs
``batch`` independent copies of the system in one sweep, so ``rhs`` must
broadcast over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, interp1d
from scipy.ndimage import maximum_filter1d

from .errors import Blowup, OutOfDomain, PredictorDiverged, TooShort

__all__ = [
    "History",
    "DelaySystemSpec",
    "Trajectory",
    "EnvelopeReport",
    "integrate",
    "segment_norm",
    "verify_envelope",
    "aligned_step",
    "random_histories",
]

_SNAP = 1e-9  # relative snapping of lookups onto mesh nodes


# ---------------------------------------------------------------------------
# history


class History:
    """Initial segment ``phi`` on ``[-r, 0]``.

    ``phi(s)`` with ``s`` of shape ``S`` returns an array of shape ``S + shape``.
    """

    def __init__(self, func: Callable, r: float, shape: tuple, kind: str = "callable"):
        if r < 0:
            raise ValueError("r must be nonnegative")
        self._func = func
        self.r = float(r)
        self.shape = tuple(shape)
        self.kind = kind

    def __call__(self, s):
        s = np.asarray(s, float)
        out = np.asarray(self._func(s), float)
        return np.broadcast_to(out, s.shape + self.shape)

    @classmethod
    def constant(cls, value, r: float) -> "History":
        v = np.atleast_1d(np.asarray(value, float))
        return cls(lambda s: np.broadcast_to(v, np.shape(s) + v.shape).copy(), r, v.shape, "constant")

    @classmethod
    def polynomial(cls, coeffs, r: float) -> "History":
        """``phi(s) = sum_k coeffs[k] s^k``; ``coeffs`` has shape ``(deg + 1,) + shape``."""
        c = np.asarray(coeffs, float)
        if c.ndim == 1:
            c = c[:, None]

        def f(s):
            s = np.asarray(s, float)
            sx = s.reshape(s.shape + (1,) * (c.ndim - 1))
            out = np.broadcast_to(c[-1], s.shape + c.shape[1:]).copy()
            for ck in c[-2::-1]:
                out = out * sx + ck
            return out

        return cls(f, r, c.shape[1:], "polynomial")

    @classmethod
    def tabulated(cls, s_grid, values, r: float, slopes=None) -> "History":
        """Interpolated table; cubic Hermite when one-sided slopes are supplied."""
        s_grid = np.asarray(s_grid, float)
        values = np.asarray(values, float)
        if values.ndim == 1:
            values = values[:, None]
        if slopes is not None:
            slopes = np.asarray(slopes, float).reshape(values.shape)
            interp = CubicHermiteSpline(s_grid, values, slopes, axis=0, extrapolate=True)
        elif s_grid.size == 1:
            interp = lambda s: np.broadcast_to(values[0], np.shape(s) + values.shape[1:])  # noqa: E731
        else:
            interp = interp1d(s_grid, values, axis=0, fill_value="extrapolate", assume_sorted=True)
        return cls(interp, r, values.shape[1:], "tabulated")

    def sup_norm(self, n: int = 2049) -> np.ndarray:
        """``sup_{s in [-r, 0]} |phi(s)|`` (Euclidean over the last axis)."""
        if self.kind == "constant":
            return np.linalg.norm(self(0.0), axis=-1)
        s = np.linspace(-self.r, 0.0, n) if self.r > 0 else np.zeros(1)
        return np.linalg.norm(self(s), axis=-1).max(axis=0)


def random_histories(n: int, r: float, dim: int = 1, radius: float = 1.0, seed: int = 42) -> History:
    """Batch of ``n`` linear histories with ``sup |phi| <= radius``.

    Each coordinate interpolates between independent uniform values at
    ``s = -r`` and ``s = 0``; the Euclidean norm is then rescaled into the ball.
    """
    rng = np.random.default_rng(seed)
    end = rng.uniform(-1.0, 1.0, (n, dim))
    start = rng.uniform(-1.0, 1.0, (n, dim))
    scale = radius / np.maximum(np.maximum(np.linalg.norm(end, axis=1), np.linalg.norm(start, axis=1)), 1.0)
    end *= scale[:, None]
    start *= scale[:, None]
    slope = (end - start) / r if r > 0 else np.zeros_like(end)
    return History.polynomial(np.stack([end, slope]), r)


# ---------------------------------------------------------------------------
# system


def _as_delay(d):
    if callable(d):
        return d
    val = float(d)
    f = lambda t, v=val: v  # noqa: E731
    f.constant = val
    return f


@dataclass
class DelaySystemSpec:
    """``x'(t) = rhs(t, x, [x(t - r_1(t)), ...])`` with lags in ``[0, max_lag]``."""

    dim: int
    rhs: Callable
    delays: Sequence = ()
    max_lag: float | None = None
    name: str = ""

    def __post_init__(self):
        self.delays = [_as_delay(d) for d in self.delays]
        consts = self.constant_lags
        if self.max_lag is None:
            if len(consts) != len(self.delays):
                raise ValueError("max_lag is required for time-varying delays")
            self.max_lag = max(consts, default=0.0)
        if any(c < 0 or c > self.max_lag + 1e-14 for c in consts):
            raise ValueError("constant delays must lie in [0, max_lag]")

    @property
    def constant_lags(self) -> list:
        return [d.constant for d in self.delays if hasattr(d, "constant")]


def aligned_step(h_max: float, lags) -> float:
    """Largest ``h <= h_max`` dividing every constant lag, when one exists."""
    lags = [float(L) for L in lags if float(L) > 0]
    if not lags:
        return h_max
    fr = [Fraction(L).limit_denominator(10**6) for L in lags]
    if any(abs(float(f) - L) > 1e-12 * L for f, L in zip(fr, lags)):
        return h_max
    g = fr[0]
    for f in fr[1:]:
        # gcd of rationals
        num = math.gcd(g.numerator * f.denominator, f.numerator * g.denominator)
        g = Fraction(num, g.denominator * f.denominator)
    g = float(g)
    return g / math.ceil(g / h_max - 1e-12)


# ---------------------------------------------------------------------------
# trajectory


def _hermite(x0, f0, x1, f1, h, th):
    th = np.asarray(th, float)[(...,) + (None,) * (np.ndim(x0) - 1)] if np.ndim(th) else th
    th2 = th * th
    th3 = th2 * th
    return ((2 * th3 - 3 * th2 + 1) * x0 + (th3 - 2 * th2 + th) * h * f0
            + (-2 * th3 + 3 * th2) * x1 + (th3 - th2) * h * f1)


@dataclass
class Trajectory:
    """Dense-output solution on ``[tau - r, tau + n h]``."""

    tau: float
    h: float
    mesh: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    history: History
    r: float
    dropped: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dropped is None:
            self.dropped = np.zeros(self.states.shape[1:-1], bool)

    @property
    def t_end(self) -> float:
        return float(self.mesh[-1])

    @property
    def n_steps(self) -> int:
        return self.mesh.size - 1

    @property
    def state_shape(self) -> tuple:
        return self.states.shape[1:]

    def _eval_scalar(self, q: float):
        tau, h = self.tau, self.h
        if q < tau:
            if q < tau - self.r - _SNAP * max(h, 1.0):
                raise OutOfDomain(f"lookup at t={q} precedes tau - r = {tau - self.r}")
            return self.history(max(q - tau, -self.r))
        x = (q - tau) / h
        k = int(round(x))
        if abs(x - k) < _SNAP and k <= self.n_steps:
            return self.states[k]
        k = int(math.floor(x))
        if k >= self.n_steps:
            raise OutOfDomain(f"lookup at t={q} beyond t_end = {self.t_end}")
        return _hermite(self.states[k], self.derivs[k], self.states[k + 1], self.derivs[k + 1], h, x - k)

    def __call__(self, t):
        """Dense evaluation; returns ``shape(t) + state_shape``."""
        t = np.asarray(t, float)
        if t.ndim == 0:
            return np.array(self._eval_scalar(float(t)))
        flat = t.ravel()
        out = np.empty((flat.size,) + self.state_shape)
        if flat.size and (flat.min() < self.tau - self.r - _SNAP * max(self.h, 1.0)
                          or flat.max() > self.t_end + _SNAP * self.h):
            raise OutOfDomain("dense evaluation outside [tau - r, t_end]")
        hist = flat < self.tau
        if hist.any():
            out[hist] = self.history(np.maximum(flat[hist] - self.tau, -self.r))
        rest = ~hist
        if rest.any():
            x = (flat[rest] - self.tau) / self.h
            k = np.clip(np.floor(x).astype(int), 0, self.n_steps - 1) if self.n_steps else np.zeros(x.size, int)
            th = x - k
            if self.n_steps:
                vals = _hermite(self.states[k], self.derivs[k], self.states[k + 1], self.derivs[k + 1], self.h, th)
            else:
                vals = np.broadcast_to(self.states[0], (x.size,) + self.state_shape).copy()
            kn = np.rint(x).astype(int)
            node = (np.abs(x - kn) < _SNAP) & (kn <= self.n_steps)
            vals[node] = self.states[kn[node]]
            out[rest] = vals
        return out.reshape(t.shape + self.state_shape)

    def member(self, index) -> "Trajectory":
        """Single batch member as its own trajectory."""
        idx = (slice(None),) + np.index_exp[index]
        hist = self.history
        sub = History(lambda s: hist(s)[(Ellipsis,) + np.index_exp[index] + (slice(None),)], hist.r,
                      self.states[idx].shape[1:], hist.kind)
        return Trajectory(self.tau, self.h, self.mesh, self.states[idx], self.derivs[idx], sub, self.r,
                          np.asarray(self.dropped[np.index_exp[index]]))

    def norm_grid(self, sub: int = 4):
        """``(times, |x|)`` on ``[tau - r, t_end]`` with spacing ``h / sub``.

        The history part uses the same spacing, ending exactly at ``tau``.
        """
        d = self.h / sub
        n_hist = int(math.ceil(self.r / d - 1e-9))
        t_hist = self.tau - d * np.arange(n_hist, 0, -1)
        t_main = self.tau + d * np.arange(self.n_steps * sub + 1)
        times = np.concatenate([t_hist, t_main])
        vals = self(times)
        return times, np.linalg.norm(vals, axis=-1), n_hist

    def segnorm_profile(self, sub: int = 4):
        """Segment norms ``||x_t||`` for ``t`` on the grid ``tau + k h / sub``.

        Sliding maximum of ``|x|`` over a trailing window of length ``r``.
        """
        times, nrm, n_hist = self.norm_grid(sub)
        d = self.h / sub
        w = int(math.ceil(self.r / d - 1e-9)) + 1
        if w <= 1:
            return times[n_hist:], nrm[n_hist:]
        centred = maximum_filter1d(nrm, size=w, axis=0, mode="nearest")
        j = np.arange(n_hist, times.size)
        seg = centred[j - (w - 1) + w // 2]
        return times[n_hist:], seg

    def to_csv(self, path, sub: int = 1):
        """Write ``t, x1..xn, segnorm`` with one row per mesh node."""
        if self.states.ndim != 2:
            raise ValueError("CSV export needs an unbatched trajectory; use member()")
        t_seg, seg = self.segnorm_profile(sub=4)
        seg_nodes = seg[::4]
        dim = self.states.shape[1]
        data = np.column_stack([self.mesh, self.states, seg_nodes])
        header = ",".join(["t"] + [f"x{i + 1}" for i in range(dim)] + ["segnorm"])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def segment_norm(traj: Trajectory, t: float, n_samples: int = 257):
    """``sup_{s in [-r, 0]} |x(t + s)|`` sampled at mesh nodes plus a uniform fill."""
    if t < traj.tau - 1e-12 or t > traj.t_end + _SNAP * traj.h:
        raise OutOfDomain(f"t={t} outside [tau, t_end]")
    if traj.r == 0:
        return np.linalg.norm(traj(t), axis=-1)
    lo = t - traj.r
    fill = np.linspace(lo, t, max(n_samples, 2))
    k0 = math.ceil((max(lo, traj.tau) - traj.tau) / traj.h - _SNAP)
    k1 = math.floor((t - traj.tau) / traj.h + _SNAP)
    nodes = traj.mesh[max(k0, 0):max(k1, -1) + 1]
    pts = np.concatenate([fill, nodes])
    return np.linalg.norm(traj(pts), axis=-1).max(axis=0)


# ---------------------------------------------------------------------------
# integration


def integrate(spec: DelaySystemSpec, phi: History, tau: float, t_end: float, h: float, *,
              guard: float = 1e12, on_blowup: str = "raise", predictor: bool = True,
              max_sweeps: int = 5, sweep_tol: float = 1e-12) -> Trajectory:
    """RK4 method of steps from ``tau`` to (at least) ``t_end``.

    ``on_blowup="drop"`` sets diverging batch members to NaN and flags them in
    ``traj.dropped`` instead of raising.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if not t_end > tau:
        raise ValueError("t_end must exceed tau")
    if on_blowup not in ("raise", "drop"):
        raise ValueError("on_blowup must be 'raise' or 'drop'")
    r = float(spec.max_lag)
    if phi.r + 1e-12 < r:
        raise ValueError("history is shorter than the maximal lag")
    N = int(math.ceil((t_end - tau) / h - 1e-9))
    mesh = tau + h * np.arange(N + 1)
    shape = phi.shape
    if shape[-1] != spec.dim:
        raise ValueError(f"history state dimension {shape[-1]} != system dimension {spec.dim}")
    X = np.empty((N + 1,) + shape)
    F = np.empty((N + 1,) + shape)
    dropped = np.zeros(shape[:-1], bool)
    rhs = spec.rhs
    delays = spec.delays
    snap = _SNAP * h

    def lookup(q, n, prov):
        """``x(q)`` given accepted steps ``0..n`` and, optionally, the provisional step end."""
        if q <= mesh[n] + snap:
            if q < tau:
                if q < tau - r - snap:
                    raise OutOfDomain(f"delayed argument {q} precedes tau - r")
                return phi(max(q - tau, -r))
            x = (q - tau) / h
            k = int(round(x))
            if abs(x - k) < _SNAP:
                return X[k]
            k = int(math.floor(x))
            return _hermite(X[k], F[k], X[k + 1], F[k + 1], h, x - k)
        if prov is None:
            raise _Overlap
        th = (q - mesh[n]) / h
        if abs(th - 1.0) < _SNAP:
            return prov[0]
        return _hermite(X[n], F[n], prov[0], prov[1], h, th)

    def xd(tq, n, prov):
        return [lookup(tq - d(tq), n, prov) for d in delays]

    def stage(n, prov):
        t0 = mesh[n]
        tm = t0 + 0.5 * h
        t1 = mesh[n + 1]
        x0 = X[n]
        k1 = F[n]
        k2 = rhs(tm, x0 + 0.5 * h * k1, xd(tm, n, prov))
        k3 = rhs(tm, x0 + 0.5 * h * k2, xd(tm, n, prov))
        k4 = rhs(t1, x0 + h * k3, xd(t1, n, prov))
        x1 = x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return x1

    def finish(n, x1, prov):
        t1 = mesh[n + 1]
        return np.asarray(rhs(t1, x1, xd(t1, n, (x1, prov[1]) if prov is not None else None)), float)

    X[0] = phi(0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        F[0] = rhs(tau, X[0], [phi(max(-d(tau), -r)) for d in delays])
        for n in range(N):
            try:
                x1 = stage(n, None)
                f1 = finish(n, x1, None)
            except _Overlap:
                if not predictor:
                    raise ValueError("delay shorter than the step; enable the predictor") from None
                x1, f1 = _resolve_overlap(n, X, F, h, stage, finish, max_sweeps, sweep_tol, dropped)
            X[n + 1] = x1
            F[n + 1] = f1
            nrm = np.linalg.norm(x1, axis=-1)
            bad = ~(nrm <= guard) | ~np.all(np.isfinite(f1), axis=-1)
            bad &= ~dropped
            if np.any(bad):
                if on_blowup == "raise":
                    partial = Trajectory(tau, h, mesh[: n + 1], X[: n + 1], F[: n + 1], phi, r, dropped.copy())
                    raise Blowup(f"state norm exceeded {guard:g} at t={mesh[n + 1]:.6g}",
                                 time=float(mesh[n + 1]), partial=partial)
                dropped |= bad
                X[n + 1][dropped] = np.nan
                F[n + 1][dropped] = np.nan
    return Trajectory(tau, h, mesh, X, F, phi, r, dropped)


class _Overlap(Exception):
    pass


def _resolve_overlap(n, X, F, h, stage, finish, max_sweeps, tol, dropped):
    """Fixed-point iteration on ``(x_{n+1}, f_{n+1})`` for lookups inside the step."""
    if n >= 1:
        # extrapolate the previous Hermite piece one step ahead
        x1 = _hermite(X[n - 1], F[n - 1], X[n], F[n], h, 2.0)
        f1 = 2.0 * F[n] - F[n - 1]
    else:
        x1 = X[n] + h * F[n]
        f1 = F[n].copy()
    live = ~dropped
    for _ in range(max_sweeps):
        x_new = stage(n, (x1, f1))
        f_new = finish(n, x_new, (x_new, f1))
        dx = np.abs(x_new - x1)[live]
        scale = 1.0 + np.abs(x_new)[live]
        df = np.abs(f_new - f1)[live]
        fscale = 1.0 + np.abs(f_new)[live]
        x1, f1 = x_new, f_new
        if np.all(dx <= tol * scale) and np.all(df <= tol * fscale):
            return x1, f1
    raise PredictorDiverged(f"overlap iteration did not converge in {max_sweeps} sweeps at step {n}")


# ---------------------------------------------------------------------------
# envelope verification


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    max_violation: float
    worst_time: float
    samples: int
    tolerance: float = 0.0

    def as_report(self) -> dict:
        return {"passed": self.passed, "max_violation": self.max_violation, "worst_time": self.worst_time,
                "samples": self.samples, "tolerance": self.tolerance}


def verify_envelope(traj: Trajectory, cert, gamma: float, rho: float, tol: float = 1e-9,
                    sub: int = 4) -> EnvelopeReport:
    """Check ``||x_t|| <= M ||phi|| e^{-lambda (t - tau)} + gamma rho`` on a dense grid.

    ``cert`` needs attributes ``M``, ``lam`` and ``T``. Batched trajectories are
    checked member by member; the report carries the worst member.
    """
    if traj.t_end - traj.tau < cert.T - 1e-12:
        raise TooShort(f"trajectory spans {traj.t_end - traj.tau:g} < certificate horizon T = {cert.T:g}")
    t, seg = traj.segnorm_profile(sub)
    phi_norm = traj.history.sup_norm()
    live = ~np.asarray(traj.dropped)
    env = cert.M * np.multiply.outer(np.exp(-cert.lam * (t - traj.tau)), phi_norm) + gamma * rho
    viol = seg - env
    slack = tol * (cert.M * phi_norm + gamma * rho + 1.0)
    if viol.ndim > 1:
        viol = viol[:, live]
        slack = np.broadcast_to(slack, live.shape)[live]
    if viol.size == 0:
        return EnvelopeReport(True, -np.inf, float(traj.tau), 0, 0.0)
    rel = viol - slack
    i = np.unravel_index(int(np.argmax(rel)), rel.shape)
    worst = float(viol[i])
    passed = bool(np.all(rel <= 0.0))
    return EnvelopeReport(passed, worst, float(t[i[0]]), int(viol.size), float(np.max(slack)))
