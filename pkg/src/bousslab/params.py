"""Model parameters, delay laws, spatial grid, and hypothesis validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

DELAY_FORMS = ("constant", "affine", "sinusoidal")

# dense-sampling resolution for the delay-law checks
_N_SAMPLES = 10_000
_BOUND_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Physical coefficients, feedback gains and nonlinear coefficients.

    The linear part is eta_t + omega_x + a*omega_xxx + a1*omega_xxxxx = 0 and
    its mirror image; the boundary feedback is
    omega_xx(t, L) = alpha*eta_xx(t, L) + beta*eta_xx(t - tau(t), L).
    """

    a: float = 1.0
    a1: float = 1.0
    L: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    # nonlinear coefficients; only used when a run enables the nonlinear terms
    alpha_p: float = 0.0
    beta_p: float = 0.0
    rho_nl: float = 0.0
    c_nl: float | None = None   # defaults to a (scaled regime)

    def __post_init__(self):
        if self.a <= 0 or self.a1 <= 0:
            raise ConfigurationError(
                f"coefficients must be positive: a={self.a}, a1={self.a1}")
        if self.L <= 0:
            raise ConfigurationError(f"domain length must be positive, got {self.L}")
        if self.c_nl is None:
            object.__setattr__(self, "c_nl", self.a)

    @property
    def length_bound(self) -> float:
        """Largest L for which decay certification is available."""
        return math.pi * math.sqrt(5.0 * self.a1 / (3.0 * self.a))

    @property
    def length_ok(self) -> bool:
        return 0.0 < self.L < self.length_bound


@dataclass(frozen=True, eq=False)
class DelaySpec:
    """Time-varying delay law tau(t) with its bounds and the initial history.

    tau0 is tau(0); M bounds tau from above and d < 1 bounds its slope.
    `history` holds uniform samples of the boundary-trace history z0 on
    [-tau0, 0]; intermediate values are obtained by monotone cubic
    interpolation in the history line.
    """

    tau0: float = 0.5
    M: float = 0.5
    d: float = 0.0
    form: str = "constant"
    rate: float = 0.0          # affine: tau = tau0 + rate*t, saturated at M
    amplitude: float = 0.0     # sinusoidal
    frequency: float = 1.0
    phase: float = 0.0
    history: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.form not in DELAY_FORMS:
            raise ConfigurationError(f"unknown delay form {self.form!r}")
        if self.tau0 <= 0:
            raise ConfigurationError(f"tau0 must be positive, got {self.tau0}")
        hist = np.atleast_1d(np.asarray(self.history, dtype=float))
        if hist.size < 2:
            hist = np.full(2, float(hist[0]) if hist.size else 0.0)
        if hist.size < 65:
            # densify sparse seeds so the knot spacing does not jump by orders
            # of magnitude where the simulation starts appending dt-spaced
            # samples (cubic slope estimates overshoot on such jumps)
            coarse = np.linspace(-self.tau0, 0.0, hist.size)
            fine = np.linspace(-self.tau0, 0.0, 65)
            hist = np.interp(fine, coarse, hist)
        object.__setattr__(self, "history", hist)

    def history_times(self) -> np.ndarray:
        """Uniform sample times on [-tau0, 0] matching `history`."""
        return np.linspace(-self.tau0, 0.0, self.history.size)

    def with_history(self, values) -> "DelaySpec":
        return replace(self, history=np.asarray(values, dtype=float))


def constant_history(value: float, n: int = 2) -> np.ndarray:
    return np.full(n, float(value))


def tau_at(dly: DelaySpec, t: float) -> tuple[float, float]:
    """Evaluate (tau(t), tau'(t)) exactly for the closed-form delay laws."""
    if t < 0:
        raise ConfigurationError(f"tau_at requires t >= 0, got {t}")
    if dly.form == "constant":
        return dly.tau0, 0.0
    if dly.form == "affine":
        if dly.rate <= 0:
            return dly.tau0, 0.0
        t_sat = (dly.M - dly.tau0) / dly.rate
        if t < t_sat:
            return dly.tau0 + dly.rate * t, dly.rate
        return dly.M, 0.0
    if dly.form == "sinusoidal":
        # anchored so tau(0) = tau0 for every phase
        s = math.sin(dly.frequency * t + dly.phase) - math.sin(dly.phase)
        tau = dly.tau0 + dly.amplitude * s
        tau_dot = dly.amplitude * dly.frequency * math.cos(dly.frequency * t + dly.phase)
        return tau, tau_dot
    raise ConfigurationError(f"unknown delay form {dly.form!r}")


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n interior nodes on (0, L); h = L/(n+1)."""

    n: int
    L: float

    def __post_init__(self):
        if self.n < 8:
            raise ConfigurationError(
                f"need n >= 8 interior nodes for the fifth-derivative stencil, got {self.n}")
        if self.L <= 0:
            raise ConfigurationError(f"domain length must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.h, self.L - self.h, self.n)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    severity: str           # "error" | "warning"
    message: str
    value: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def errors(self):
        return [c for c in self.checks if not c.passed and c.severity == "error"]

    @property
    def warnings(self):
        return [c for c in self.checks if not c.passed and c.severity == "warning"]

    @property
    def ok(self) -> bool:
        """True when simulation may proceed (warnings allowed)."""
        return not self.errors

    @property
    def certifiable(self) -> bool:
        return not self.errors and not self.warnings

    def __str__(self):
        lines = []
        for c in self.checks:
            mark = "ok  " if c.passed else ("WARN" if c.severity == "warning" else "FAIL")
            lines.append(f"[{mark}] {c.name}: {c.message}")
        return "\n".join(lines)


def validate_params(p: SystemParams, dly: DelaySpec, horizon: float = 100.0) -> ValidationReport:
    """Check every standing hypothesis; L-restriction failures are warnings."""
    checks: list[Check] = []

    def add(name, passed, severity, message, value=None):
        checks.append(Check(name, bool(passed), severity, message, value))

    add("a_positive", p.a > 0, "error", f"a = {p.a}", p.a)
    add("a1_positive", p.a1 > 0, "error", f"a1 = {p.a1}", p.a1)
    add("L_positive", p.L > 0, "error", f"L = {p.L}", p.L)
    bound = p.length_bound
    add("L_restriction", p.L < bound, "warning",
        f"L = {p.L} vs certification bound {bound:.6g} "
        "(failure blocks certification only, not simulation)", p.L)

    add("tau0_positive", dly.tau0 > 0, "error", f"tau0 = {dly.tau0}", dly.tau0)
    add("M_upper_bound", dly.M >= dly.tau0, "error",
        f"M = {dly.M} must be >= tau0 = {dly.tau0}", dly.M)
    add("slope_bound_range", 0.0 <= dly.d < 1.0, "error",
        f"d = {dly.d} must lie in [0, 1)", dly.d)

    # dense sampling of the chosen closed form over the horizon
    ts = np.linspace(0.0, horizon, _N_SAMPLES)
    taus = np.empty_like(ts)
    dots = np.empty_like(ts)
    for i, t in enumerate(ts):
        taus[i], dots[i] = tau_at(dly, float(t))
    tmin, tmax, dotmax = taus.min(), taus.max(), dots.max()
    add("tau_floor", tmin >= dly.tau0 * (1.0 - _BOUND_TOL), "error",
        f"min sampled tau = {tmin:.6g} vs tau0 = {dly.tau0}", tmin)
    add("tau_ceiling", tmax <= dly.M * (1.0 + _BOUND_TOL), "error",
        f"max sampled tau = {tmax:.6g} vs M = {dly.M}", tmax)
    if dly.d < 1.0:
        slope_ok = dotmax <= dly.d + _BOUND_TOL
        add("slope_bound", slope_ok, "error",
            f"max sampled tau' = {dotmax:.6g} vs d = {dly.d}", dotmax)

    return ValidationReport(tuple(checks))
