"""Pullback attractors of dissipative delay systems, sampled by finite clouds.

The process ``Phi(t, tau) phi = x_t(tau, phi)`` is realised with the batched
method-of-steps integrator. A finite cloud of history segments stands in for a
bounded set; pulling the start time back and watching the images at a fixed
observation time settle gives a sample of the attractor section there.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .dde import DelaySystemSpec, History, aligned_step, integrate
from .errors import AttractorError, NotConvergedWarning

__all__ = [
    "SetCloud",
    "PullbackReport",
    "AbsorbingBallReport",
    "sample_cloud",
    "process_evolve",
    "hausdorff_semidist",
    "mutual_distance",
    "pullback_attractor",
    "invariance_check",
    "absorbing_ball",
    "default_schedule",
]


@dataclass
class SetCloud:
    """Segments tabulated on a shared grid ``s_grid`` over ``[-r, 0]``.

    ``values`` has shape ``(n_seg, n_nodes, dim)``. Between nodes segments are
    cubic Hermite with the given ``slopes``; missing slopes are estimated by
    finite differences. Rows flagged in ``dropped`` are NaN and ignored.
    """

    values: np.ndarray
    s_grid: np.ndarray
    slopes: np.ndarray | None = None
    label: str = ""
    dropped: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.ndim == 2:
            self.values = self.values[..., None]
        self.s_grid = np.asarray(self.s_grid, float)
        if self.values.ndim != 3 or self.values.shape[0] == 0:
            raise AttractorError("a cloud needs a nonempty (n_seg, n_nodes, dim) array")
        if self.s_grid.ndim != 1 or self.s_grid.size != self.values.shape[1]:
            raise AttractorError("s_grid does not match the tabulation")
        if self.s_grid.size > 1 and (np.any(np.diff(self.s_grid) <= 0) or abs(self.s_grid[-1]) > 1e-12):
            raise AttractorError("s_grid must increase to 0")
        if self.dropped is None:
            self.dropped = np.zeros(self.values.shape[0], bool)
        if self.slopes is None:
            if self.s_grid.size > 1:
                self.slopes = np.gradient(self.values, self.s_grid, axis=1)
            else:
                self.slopes = np.zeros_like(self.values)
        self.slopes = np.asarray(self.slopes, float).reshape(self.values.shape)

    @property
    def r(self) -> float:
        return float(-self.s_grid[0])

    @property
    def n_segments(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def spacing(self) -> float:
        return float(self.s_grid[1] - self.s_grid[0]) if self.s_grid.size > 1 else 0.0

    def live(self) -> "SetCloud":
        keep = ~self.dropped
        return SetCloud(self.values[keep], self.s_grid, self.slopes[keep], self.label)

    def _spline(self):
        if self.s_grid.size == 1:
            v = np.moveaxis(self.values, 1, 0)[0]
            f = lambda s: np.broadcast_to(v, np.shape(s) + v.shape)  # noqa: E731
            f.derivative = lambda: (lambda s: np.zeros(np.shape(s) + v.shape))
            return f
        return CubicHermiteSpline(self.s_grid, np.moveaxis(self.values, 1, 0), np.moveaxis(self.slopes, 1, 0),
                                  axis=0, extrapolate=True)

    def histories(self) -> History:
        """Batched history with state shape ``(n_seg, dim)``."""
        return History(self._spline(), self.r, self.values.shape[::2], "tabulated")

    def segment_norms(self) -> np.ndarray:
        """Sup over nodes of the Euclidean norm, per segment."""
        return np.linalg.norm(self.values, axis=-1).max(axis=1)

    def to_csv(self, path):
        """One row per segment node: ``segment, s, x1..xn``."""
        n, m, d = self.values.shape
        seg = np.repeat(np.arange(n), m)
        s = np.tile(self.s_grid, n)
        data = np.column_stack([seg, s, self.values.reshape(n * m, d)])
        header = ",".join(["segment", "s"] + [f"x{i + 1}" for i in range(d)])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def sample_cloud(r: float, dim: int = 1, radius: float = 1.0, n_nodes: int = 101, n_random: int = 16,
                 seed: int = 42, label: str = "") -> SetCloud:
    """Corners of the ball plus random constants, all with sup-norm ``<= radius``.

    Corners are the constants ``+-radius e_k`` and the ramps
    ``+-radius (1 + 2 s / r) e_k``; the random part draws constant histories
    with uniformly distributed norm in random directions.
    """
    if r <= 0 or radius < 0 or n_nodes < 2:
        raise ValueError("need r > 0, radius >= 0 and n_nodes >= 2")
    s = np.linspace(-r, 0.0, n_nodes)
    s[-1] = 0.0
    vals, slopes = [], []
    ramp = 1.0 + 2.0 * s / r
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        for sign in (1.0, -1.0):
            vals.append(np.outer(np.ones(n_nodes), sign * radius * e))
            slopes.append(np.zeros((n_nodes, dim)))
            vals.append(np.outer(ramp, sign * radius * e))
            slopes.append(np.outer(np.full(n_nodes, 2.0 / r), sign * radius * e))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        d = rng.normal(size=dim)
        d /= np.linalg.norm(d)
        vals.append(np.outer(np.ones(n_nodes), radius * rng.uniform() * d))
        slopes.append(np.zeros((n_nodes, dim)))
    return SetCloud(np.array(vals), s, np.array(slopes), label or f"ball(radius={radius:g}, seed={seed})")


def _hermite_slope(x0, f0, x1, f1, h, th):
    th = np.asarray(th, float)[(...,) + (None,) * (np.ndim(x0) - 1)]
    return (6 * th**2 - 6 * th) * (x0 - x1) / h + (3 * th**2 - 4 * th + 1) * f0 + (3 * th**2 - 2 * th) * f1


def process_evolve(spec: DelaySystemSpec, cloud: SetCloud, tau: float, t: float, h: float,
                   guard: float = 1e8) -> SetCloud:
    """``Phi(t, tau)`` applied to every live segment.

    The step is refined so that lags, the tabulation spacing and ``t - tau`` are
    multiples of it whenever possible; the output nodes then sit on mesh nodes
    and carry the integrator's own derivatives as slopes. When the spacing
    equals the step, the restarted history coincides with the dense output and
    ``Phi(t, s) Phi(s, tau) = Phi(t, tau)`` holds to rounding. Segments that
    blow up are dropped and flagged.
    """
    if t < tau:
        raise ValueError("process_evolve needs t >= tau")
    if spec.max_lag > cloud.r + 1e-12:
        raise AttractorError("cloud segments are shorter than the maximal lag")
    if t == tau:
        return replace(cloud, values=cloud.values.copy(), slopes=cloud.slopes.copy(), dropped=cloud.dropped.copy())
    live = ~cloud.dropped
    out_v = np.full_like(cloud.values, np.nan)
    out_s = np.full_like(cloud.slopes, np.nan)
    dropped = cloud.dropped.copy()
    if not live.any():
        return SetCloud(out_v, cloud.s_grid, out_s, cloud.label, dropped)
    sub = cloud.live()
    span = t - tau
    h_eff = aligned_step(h, list(spec.constant_lags) + [sub.spacing, span])
    traj = integrate(spec, sub.histories(), tau, t, h_eff, on_blowup="drop", guard=guard)
    q = t + cloud.s_grid
    vals = traj(q)  # (n_nodes, n_live, dim)
    slopes = np.empty_like(vals)
    before = q < tau - 1e-12 * max(1.0, abs(tau))
    if before.any():
        slopes[before] = sub._spline().derivative()(q[before] - tau)
    idx = np.nonzero(~before)[0]
    if idx.size:
        x = (q[idx] - tau) / traj.h
        kn = np.rint(x).astype(int)
        on = np.abs(x - kn) < 1e-9
        slopes[idx[on]] = traj.derivs[np.minimum(kn[on], traj.n_steps)]
        off = idx[~on]
        if off.size:
            xo = (q[off] - tau) / traj.h
            k = np.clip(np.floor(xo).astype(int), 0, traj.n_steps - 1)
            slopes[off] = _hermite_slope(traj.states[k], traj.derivs[k], traj.states[k + 1], traj.derivs[k + 1],
                                         traj.h, xo - k)
    bad = np.asarray(traj.dropped) | ~np.all(np.isfinite(vals), axis=(0, 2))
    rows = np.nonzero(live)[0]
    good = rows[~bad]
    out_v[good] = np.moveaxis(vals, 0, 1)[~bad]
    out_s[good] = np.moveaxis(slopes, 0, 1)[~bad]
    dropped[rows[bad]] = True
    return SetCloud(out_v, cloud.s_grid, out_s, cloud.label, dropped)


def hausdorff_semidist(A: SetCloud, B: SetCloud, chunk: int = 256) -> float:
    """``sup_{a in A} inf_{b in B} ||a - b||`` with the max over shared nodes as the norm."""
    if A.s_grid.shape != B.s_grid.shape or not np.allclose(A.s_grid, B.s_grid, rtol=0, atol=1e-12):
        raise AttractorError("clouds must share the same tabulation")
    if A.dim != B.dim:
        raise AttractorError("clouds must have the same state dimension")
    a = A.values[~A.dropped]
    b = B.values[~B.dropped]
    if a.shape[0] == 0:
        return 0.0
    if b.shape[0] == 0:
        return math.inf
    best = np.empty(a.shape[0])
    for i in range(0, a.shape[0], chunk):
        diff = a[i:i + chunk, None] - b[None]
        d = np.linalg.norm(diff, axis=-1).max(axis=-1)
        best[i:i + chunk] = d.min(axis=1)
    return float(best.max())


def mutual_distance(A: SetCloud, B: SetCloud) -> float:
    return max(hausdorff_semidist(A, B), hausdorff_semidist(B, A))


def default_schedule(t_star: float, r: float, factors=(10, 20, 40, 80, 160)) -> list:
    return [t_star - f * r for f in factors]


@dataclass
class PullbackReport:
    t_star: float
    tau_schedule: list
    dH_history: list
    converged: bool
    attractor_sample: SetCloud
    contained_in_ball: bool | None = None
    radius: float | None = None
    n_dropped: int = 0
    images: list = field(default_factory=list, repr=False)

    def as_report(self) -> dict:
        norms = self.attractor_sample.live().segment_norms() if (~self.attractor_sample.dropped).any() else []
        return {
            "description": "finite sample of the pullback attractor section at t_star",
            "t_star": self.t_star,
            "tau_schedule": list(self.tau_schedule),
            "dH_history": list(self.dH_history),
            "converged": self.converged,
            "contained_in_ball": self.contained_in_ball,
            "radius": self.radius,
            "n_segments": self.attractor_sample.n_segments,
            "n_dropped": self.n_dropped,
            "tabulation_spacing": self.attractor_sample.spacing,
            "sample_max_norm": float(np.max(norms)) if len(norms) else None,
        }


def pullback_attractor(spec: DelaySystemSpec, t_star: float, cloud0: SetCloud, tau_schedule=None,
                       h: float = 0.01, tol: float = 1e-3, radius: float | None = None,
                       keep_images: bool = False) -> PullbackReport:
    """Images ``Phi(t_star, tau_k) cloud0`` for a receding schedule.

    ``dH_history[k]`` is the mutual semi-distance between images ``k`` and
    ``k + 1``. Convergence means the last entry is below ``tol``; otherwise a
    :class:`NotConvergedWarning` is issued and the report still returned.
    """
    r = cloud0.r
    sched = default_schedule(t_star, max(r, spec.max_lag)) if tau_schedule is None else [float(x) for x in tau_schedule]
    if len(sched) < 1:
        raise AttractorError("empty tau schedule")
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise AttractorError("tau schedule must be strictly decreasing")
    if sched[0] > t_star:
        raise AttractorError("tau schedule must lie below t_star")
    images, dH = [], []
    for tau in sched:
        img = process_evolve(spec, cloud0, tau, t_star, h)
        if images:
            dH.append(mutual_distance(images[-1], img))
        images.append(img)
    last = images[-1]
    converged = bool(dH) and dH[-1] < tol
    n_drop = int(last.dropped.sum())
    contained = None
    if radius is not None:
        live_norms = last.live().segment_norms() if (~last.dropped).any() else np.array([])
        contained = bool(n_drop == 0 and np.all(live_norms <= radius))
    if not converged:
        warnings.warn(f"pullback images not settled: last mutual distance {dH[-1] if dH else float('nan'):g} "
                      f">= tol {tol:g}", NotConvergedWarning, stacklevel=2)
    return PullbackReport(float(t_star), sched, [float(d) for d in dH], converged, last, contained, radius, n_drop,
                          images if keep_images else [])


def invariance_check(spec: DelaySystemSpec, report: PullbackReport, cloud0: SetCloud, delta: float,
                     h: float = 0.01) -> float:
    """Mutual distance between ``Phi(t* + delta, t*) A(t*)`` and the pullback image at ``t* + delta``.

    The second image starts at the last schedule time shifted by ``delta``, so it
    is an independent computation of the section at ``t* + delta``.
    """
    forward = process_evolve(spec, report.attractor_sample, report.t_star, report.t_star + delta, h)
    tau = report.tau_schedule[-1] + delta
    direct = process_evolve(spec, cloud0, tau, report.t_star + delta, h)
    return mutual_distance(forward, direct)


@dataclass
class AbsorbingBallReport:
    radius: float
    calibration_max: float
    entry_times: np.ndarray
    entered: np.ndarray
    remained: np.ndarray
    t_end: float

    @property
    def all_absorbed(self) -> bool:
        return bool(np.all(self.entered & self.remained))

    def as_report(self) -> dict:
        finite = self.entry_times[np.isfinite(self.entry_times)]
        return {"radius": self.radius, "calibration_max": self.calibration_max,
                "n_trajectories": int(self.entered.size), "n_entered": int(self.entered.sum()),
                "n_remained": int(self.remained.sum()), "all_absorbed": self.all_absorbed,
                "max_entry_time": float(finite.max()) if finite.size else None, "t_end": self.t_end}


def absorbing_ball(spec: DelaySystemSpec, test: SetCloud, calibration: SetCloud, tau: float, t_end: float,
                   h: float, burn_in: float, margin: float = 0.05) -> AbsorbingBallReport:
    """Measure an absorbing radius on one cloud and check it on another.

    The radius is ``(1 + margin)`` times the largest segment norm of the
    calibration trajectories after ``tau + burn_in``. A test trajectory is
    absorbed when its segment norm stays within the radius on the whole window
    ``[tau + burn_in, t_end]``; its entry time is the end of its last excursion.
    """
    if not tau + burn_in < t_end:
        raise ValueError("burn_in must end before t_end")
    h_eff = aligned_step(h, list(spec.constant_lags) + [calibration.spacing])
    cal = integrate(spec, calibration.live().histories(), tau, t_end, h_eff, on_blowup="drop", guard=1e8)
    tc, segc = cal.segnorm_profile(sub=1)
    live_c = ~np.asarray(cal.dropped)
    cal_max = float(np.max(segc[tc >= tau + burn_in][:, live_c]))
    radius = (1.0 + margin) * cal_max
    tr = integrate(spec, test.live().histories(), tau, t_end, h_eff, on_blowup="drop", guard=1e8)
    tt, seg = tr.segnorm_profile(sub=1)
    ok = ~np.asarray(tr.dropped)
    inside = seg <= radius
    entered = inside.any(axis=0) & ok
    window = tt >= tau + burn_in
    remained = np.all(inside[window], axis=0) & ok
    n = seg.shape[0]
    outside_rev = np.argmax(~inside[::-1], axis=0)  # steps from the end to the last outside sample
    last_out = np.where(inside.all(axis=0), -1, n - 1 - outside_rev)
    entry = np.where(remained, tt[np.minimum(last_out + 1, n - 1)] - tau, np.inf)
    return AbsorbingBallReport(radius, cal_max, entry, entered, remained, float(t_end))
