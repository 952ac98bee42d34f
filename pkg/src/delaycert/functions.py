"""Scalar coefficient functions of time and the named registry.

The kernels and systems need more than point evaluation: integrals of the form
``int_s^t a`` are taken over and over, so each function exposes an
antiderivative (exact where a closed form exists), and a ``shift`` used for the
initial-time translation ``t -> t + tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "CoefficientFunction",
    "Constant",
    "SinePlusOffset",
    "AbsSine",
    "Piecewise",
    "FromCallable",
    "as_function",
    "REGISTRY",
    "make_function",
]


class CoefficientFunction:
    """Scalar function of time with antiderivative and translation support."""

    period: float | None = None

    def __call__(self, t):
        raise NotImplementedError

    def antiderivative(self, t):
        """Some fixed antiderivative ``A`` with ``A' = self``."""
        raise NotImplementedError

    def integral(self, s, t):
        """``int_s^t f``, broadcasting over ``s`` and ``t``."""
        return self.antiderivative(t) - self.antiderivative(s)

    def shift(self, tau: float) -> "CoefficientFunction":
        """Return ``t -> self(t + tau)``."""
        return FromCallable(lambda t, f=self, d=tau: f(np.asarray(t) + d))

    @property
    def is_constant(self) -> bool:
        return False

    def sup(self, t0: float, t1: float, n: int = 4097) -> float:
        """Sampled supremum of ``|f|`` on ``[t0, t1]``."""
        t = np.linspace(t0, t1, n)
        return float(np.max(np.abs(self(t))))


@dataclass(frozen=True)
class Constant(CoefficientFunction):
    value: float

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value)) if np.ndim(t) else float(self.value)

    def antiderivative(self, t):
        return self.value * np.asarray(t, dtype=float)

    def shift(self, tau):
        return self

    @property
    def is_constant(self):
        return True

    def sup(self, t0=0.0, t1=0.0, n=0):
        return abs(float(self.value))


@dataclass(frozen=True)
class SinePlusOffset(CoefficientFunction):
    """``amplitude * sin(frequency * t + phase) + offset``."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    offset: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.sin(self.frequency * np.asarray(t, dtype=float) + self.phase) + self.offset

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.frequency == 0.0:
            return (self.amplitude * np.sin(self.phase) + self.offset) * t
        return -self.amplitude / self.frequency * np.cos(self.frequency * t + self.phase) + self.offset * t

    def shift(self, tau):
        return SinePlusOffset(self.amplitude, self.frequency, self.phase + self.frequency * tau, self.offset)

    @property
    def period(self):
        return 2.0 * np.pi / abs(self.frequency) if self.frequency else None

    @property
    def is_constant(self):
        return self.amplitude == 0.0 or self.frequency == 0.0

    def sup(self, t0=0.0, t1=0.0, n=0):
        return abs(self.amplitude) + abs(self.offset)


@dataclass(frozen=True)
class AbsSine(CoefficientFunction):
    """``amplitude * |sin(frequency * t + phase)|``; a typical forcing size."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.abs(np.sin(self.frequency * np.asarray(t, dtype=float) + self.phase))

    def antiderivative(self, t):
        # each half period contributes 2/frequency
        w = self.frequency
        u = w * np.asarray(t, dtype=float) + self.phase
        k = np.floor(u / np.pi)
        frac = u - k * np.pi
        return self.amplitude / w * (2.0 * k + 1.0 - np.cos(frac))

    def shift(self, tau):
        return AbsSine(self.amplitude, self.frequency, self.phase + self.frequency * tau)

    @property
    def period(self):
        return np.pi / abs(self.frequency)

    def sup(self, t0=0.0, t1=0.0, n=0):
        return abs(self.amplitude)


@dataclass(frozen=True)
class Piecewise(CoefficientFunction):
    """Piecewise-linear interpolant through ``(times, values)``.

    With ``periodic=True`` the table is repeated with period
    ``times[-1] - times[0]`` (the end values should agree). Otherwise the end
    values are held constant outside the table.
    """

    times: tuple
    values: tuple
    periodic: bool = False
    offset: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("piecewise table needs matching 1-d times/values of length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ValueError("piecewise times must be strictly increasing")
        object.__setattr__(self, "times", tuple(t))
        object.__setattr__(self, "values", tuple(v))

    @property
    def period(self):
        return self.times[-1] - self.times[0] if self.periodic else None

    def _local(self, t):
        t = np.asarray(t, dtype=float) + self.offset
        if not self.periodic:
            return t, np.zeros_like(t)
        t0, w = self.times[0], self.period
        k = np.floor((t - t0) / w)
        return t - k * w, k

    def __call__(self, t):
        u, _ = self._local(t)
        return np.interp(u, self.times, self.values)

    def antiderivative(self, t):
        tt = np.asarray(self.times)
        vv = np.asarray(self.values)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vv[1:] + vv[:-1]) * np.diff(tt))])
        u, k = self._local(t)
        total = cum[-1]
        inside = np.clip(u, tt[0], tt[-1])
        idx = np.clip(np.searchsorted(tt, inside, side="right") - 1, 0, tt.size - 2)
        du = inside - tt[idx]
        slope = (vv[idx + 1] - vv[idx]) / (tt[idx + 1] - tt[idx])
        val = cum[idx] + vv[idx] * du + 0.5 * slope * du**2
        # constant extension outside a non-periodic table
        val = val + np.where(u < tt[0], vv[0] * (u - tt[0]), 0.0) + np.where(u > tt[-1], vv[-1] * (u - tt[-1]), 0.0)
        return val + k * total

    def shift(self, tau):
        return Piecewise(self.times, self.values, self.periodic, self.offset + tau)


@dataclass(frozen=True)
class FromCallable(CoefficientFunction):
    """Arbitrary vectorised callable; the antiderivative is numerical."""

    func: Callable = field(compare=False)
    origin: float = 0.0

    def __call__(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.empty_like(flat)
        order = np.argsort(flat)
        acc, prev = 0.0, self.origin
        # integrate left and right of the origin separately so the sweep is monotone
        for i in order:
            ti = flat[i]
            acc += integrate.quad(lambda x: float(self.func(np.asarray(x))), prev, ti, limit=200)[0]
            prev = ti
            out[i] = acc
        return out.reshape(t.shape)


def as_function(f) -> CoefficientFunction:
    """Coerce a number, callable or CoefficientFunction."""
    if isinstance(f, CoefficientFunction):
        return f
    if np.isscalar(f):
        return Constant(float(f))
    if callable(f):
        return FromCallable(f)
    raise TypeError(f"cannot interpret {f!r} as a coefficient function")


REGISTRY: dict[str, type] = {
    "constant": Constant,
    "sine_plus_offset": SinePlusOffset,
    "abs_sine": AbsSine,
    "piecewise": Piecewise,
}


def make_function(name: str, **params) -> CoefficientFunction:
    """Build a registered function by name, e.g. ``make_function("constant", value=3)``."""
    try:
        cls = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown coefficient function {name!r}; known: {sorted(REGISTRY)}") from None
    if cls is Piecewise:
        params = {k: (tuple(v) if isinstance(v, (list, tuple)) else v) for k, v in params.items()}
    return cls(**params)
