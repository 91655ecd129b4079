"""Run reports, decay fitting, and the emitted table/summary formats."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

CSV_COLUMNS = ("t", "E", "V", "V1", "V2", "trace_now", "trace_delayed")


@dataclass
class RunReport:
    """Per-step monitor series for one simulation."""

    t: np.ndarray
    E: np.ndarray
    V: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    trace_now: np.ndarray
    trace_delayed: np.ndarray
    dissipation_rhs: np.ndarray
    termination: str = "completed"
    config: dict = field(default_factory=dict)
    fields_eta: np.ndarray | None = None
    fields_omega: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.t.size

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        cols = [getattr(self, c) for c in CSV_COLUMNS]
        for k in range(self.n_rows):
            lines.append(",".join("%.17g" % col[k] for col in cols))
        return "\n".join(lines) + "\n"


def fit_decay(t: np.ndarray, E: np.ndarray, window: float = 0.5
              ) -> tuple[float, float]:
    """Least-squares slope of log E over the final `window` fraction.

    Returns (lambda_obs, r2).  Nonpositive energies truncate the fit window
    with a warning (numerical underflow guard).
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    if not 0.0 < window <= 1.0:
        raise ConfigurationError(f"window must lie in (0, 1], got {window}")
    t0 = t[-1] - window * (t[-1] - t[0])
    sel = t >= t0
    ts, Es = t[sel], E[sel]
    bad = Es <= 0.0
    if np.any(bad):
        warnings.warn("fit window truncated: energy hit zero or below")
        first_bad = int(np.argmax(bad))
        ts, Es = ts[:first_bad], Es[:first_bad]
    if ts.size < 2:
        raise ConfigurationError("not enough positive samples in the fit window")
    logE = np.log(Es)
    slope, intercept = np.polyfit(ts, logE, 1)
    pred = slope * ts + intercept
    ss_res = float(np.sum((logE - pred) ** 2))
    ss_tot = float(np.sum((logE - logE.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    return -float(slope), r2


def bound_check(t: np.ndarray, E: np.ndarray, lam: float, zeta: float,
                slack: float = 0.02) -> tuple[bool, float]:
    """Verify E(t) <= zeta E(0) exp(-lam t) (1 + slack) at every sample.

    Returns (ok, max ratio of E to the un-slacked bound).
    """
    E = np.asarray(E, dtype=float)
    bound = zeta * E[0] * np.exp(-lam * np.asarray(t, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bound > 0, E / bound,
                          np.where(E <= 0, 0.0, np.inf))
    ratio = float(np.max(ratios))
    return ratio <= 1.0 + slack, ratio


def summary_text(report: RunReport, extra: dict | None = None) -> str:
    """Structured key = value summary block."""
    items = {
        "termination": report.termination,
        "rows": report.n_rows,
        "E0": report.E[0] if report.n_rows else float("nan"),
        "E_final": report.E[-1] if report.n_rows else float("nan"),
    }
    items.update(report.config)
    if extra:
        items.update(extra)
    lines = [f"{k} = {items[k]}" for k in items]
    return "\n".join(lines) + "\n"
