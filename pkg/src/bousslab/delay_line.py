"""Boundary-trace history and the transport-variable reconstruction.

The delayed feedback needs eta_xx(t - tau(t), L); instead of co-evolving the
transport equation for z(t, rho) = eta_xx(t - tau(t) rho, L) we keep a ring
buffer of (time, trace) samples and interpolate.  The transport equation is
retained as a testable invariant through `transport_residual`.
"""

from __future__ import annotations

import bisect

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import ConfigurationError, HistoryUnderrunError
from .params import DelaySpec, tau_at


def _bessel_slopes(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Parabolic (Bessel) slope estimates; linear in the data, unlike the
    monotonicity-limited PCHIP slopes."""
    dt = np.diff(t)
    delta = np.diff(v) / dt
    m = np.empty_like(v)
    if t.size == 2:
        m[:] = delta[0]
        return m
    m[1:-1] = (dt[1:] * delta[:-1] + dt[:-1] * delta[1:]) / (dt[:-1] + dt[1:])
    # end slopes from the parabola through the three outermost points
    m[0] = ((2 * dt[0] + dt[1]) * delta[0] - dt[0] * delta[1]) / (dt[0] + dt[1])
    m[-1] = ((2 * dt[-1] + dt[-2]) * delta[-1]
             - dt[-1] * delta[-2]) / (dt[-1] + dt[-2])
    return m


class HistoryLine:
    """Ring buffer of boundary-trace samples with monotone interpolation.

    Sample times are strictly increasing; the span must always cover
    [t - M - slack, t].  Queries at stored sample times return the stored
    values exactly (all interpolation modes are interpolatory).  The default
    "cubic" mode uses parabolic (Bessel) slopes, which are linear in the
    data so that simulations superpose; "pchip" (monotone, nonlinear in the
    data) and "linear" are available as guarded options.
    """

    def __init__(self, times, values, M: float, slack: float | None = None,
                 interpolation: str = "cubic"):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if times.shape != values.shape:
            raise ConfigurationError("times and values must have equal length")
        if times.size < 2:
            raise ConfigurationError("need at least two history samples")
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError("history sample times must be strictly increasing")
        if interpolation not in ("cubic", "pchip", "linear"):
            raise ConfigurationError(f"unknown interpolation {interpolation!r}")
        if M <= 0:
            raise ConfigurationError(f"delay upper bound M must be positive, got {M}")
        self._t = list(map(float, times))
        self._v = list(map(float, values))
        self.M = float(M)
        self.slack = float(slack) if slack is not None else 0.25 * float(M)
        self.interpolation = interpolation
        self._max_gap = float(np.max(np.diff(times)))
        self._interp = None

    @classmethod
    def from_delay_spec(cls, dly: DelaySpec, interpolation: str = "cubic") -> "HistoryLine":
        """Seed the line from the sampled initial history z0 on [-tau(0), 0]."""
        return cls(dly.history_times(), dly.history, M=dly.M,
                   interpolation=interpolation)

    # -- buffer maintenance -------------------------------------------------

    @property
    def t_last(self) -> float:
        return self._t[-1]

    @property
    def t_first(self) -> float:
        return self._t[0]

    @property
    def size(self) -> int:
        return len(self._t)

    def push(self, t: float, v: float) -> None:
        """Append a sample; evict samples older than t - M - slack."""
        t = float(t)
        if t <= self._t[-1]:
            raise ConfigurationError(
                f"non-monotone push: t={t} after t_last={self._t[-1]}")
        self._max_gap = max(self._max_gap, t - self._t[-1])
        self._t.append(t)
        self._v.append(float(v))
        cutoff = t - self.M - max(self.slack, 2.0 * self._max_gap)
        if self._t[0] < cutoff:
            k = bisect.bisect_left(self._t, cutoff)
            if k > 0:
                del self._t[:k]
                del self._v[:k]
        self._interp = None

    def replace_last(self, v: float) -> None:
        """Overwrite the newest stored value (initial-state compatibility)."""
        self._v[-1] = float(v)
        self._interp = None

    # -- queries ------------------------------------------------------------

    def _interpolant(self):
        if self._interp is None:
            t = np.asarray(self._t)
            v = np.asarray(self._v)
            if self.interpolation == "cubic":
                self._interp = CubicHermiteSpline(t, v, _bessel_slopes(t, v),
                                                  extrapolate=False)
            elif self.interpolation == "pchip":
                self._interp = PchipInterpolator(t, v, extrapolate=False)
            else:
                self._interp = lambda q: np.interp(q, t, v,
                                                   left=np.nan, right=np.nan)
        return self._interp

    def query(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self._t[0] - 1e-14) or np.any(t_arr > self._t[-1] + 1e-14):
            raise HistoryUnderrunError(
                f"query in [{t_arr.min()}, {t_arr.max()}] outside stored span "
                f"[{self._t[0]}, {self._t[-1]}]")
        out = self._interpolant()(np.clip(t_arr, self._t[0], self._t[-1]))
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else np.asarray(out)


def push_trace(h: HistoryLine, t: float, v: float) -> HistoryLine:
    h.push(t, v)
    return h


def delayed_trace(h: HistoryLine, dly: DelaySpec, t: float) -> float:
    """Trace value at t - tau(t)."""
    tau, _ = tau_at(dly, t)
    return float(h.query(t - tau))


class ZProfile:
    """Samples of z(t, rho) = eta_xx(t - tau(t) rho, L) on a uniform rho grid."""

    def __init__(self, rho_nodes: np.ndarray, values: np.ndarray):
        self.rho_nodes = rho_nodes
        self.values = values

    @property
    def m(self) -> int:
        return self.rho_nodes.size - 1


def z_profile(h: HistoryLine, dly: DelaySpec, t: float, m: int) -> ZProfile:
    """values[j] = trace at t - tau(t) * j/m for j = 0..m."""
    if m < 1:
        raise ConfigurationError(f"need m >= 1 rho intervals, got {m}")
    tau, _ = tau_at(dly, t)
    rho = np.linspace(0.0, 1.0, m + 1)
    vals = h.query(t - tau * rho)
    return ZProfile(rho, np.asarray(vals, dtype=float))


def transport_residual(h: HistoryLine, dly: DelaySpec, t: float, m: int,
                       dt_fd: float | None = None) -> float:
    """Finite-difference residual of tau z_t + (1 - tau_dot rho) z_rho = 0.

    Cross-check that the history reconstruction satisfies the transport
    reformulation of the delay; max over interior rho nodes.
    """
    tau, tau_dot = tau_at(dly, t)
    if dt_fd is None:
        dt_fd = tau / m
    zp = z_profile(h, dly, t + dt_fd, m)
    zm = z_profile(h, dly, t - dt_fd, m)
    z0 = z_profile(h, dly, t, m)
    drho = 1.0 / m
    z_t = (zp.values - zm.values) / (2.0 * dt_fd)
    z_rho = (z0.values[2:] - z0.values[:-2]) / (2.0 * drho)
    rho_int = z0.rho_nodes[1:-1]
    res = tau * z_t[1:-1] + (1.0 - tau_dot * rho_int) * z_rho
    return float(np.max(np.abs(res))) if res.size else 0.0
