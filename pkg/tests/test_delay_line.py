import numpy as np
import pytest

import bousslab as bl
from bousslab.errors import ConfigurationError, HistoryUnderrunError


def _line(times, values, M=0.5, interpolation="pchip", **kw):
    return bl.HistoryLine(times, values, M=M, interpolation=interpolation, **kw)


def test_linear_interpolation_midpoint():
    h = _line([0.0, 0.1], [0.0, 1.0], interpolation="linear")
    assert abs(h.query(0.05) - 0.5) < 1e-15


def test_push_non_monotone_rejected():
    h = _line([0.0, 0.1], [0.0, 1.0])
    with pytest.raises(ConfigurationError):
        bl.push_trace(h, 0.1, 2.0)


def test_eviction_policy():
    h = _line([0.0, 0.05], [0.0, 0.0], M=0.5, slack=0.2)
    for k in range(1, 11):
        bl.push_trace(h, 0.1 * k, float(k))
    # cutoff = 1.0 - 0.5 - max(slack, 2*max_gap) = 1.0 - 0.5 - 0.2
    assert h.t_first >= 1.0 - 0.5 - 0.2 - 1e-12
    assert h.t_last == 1.0


def test_stored_samples_exact():
    t = np.linspace(-0.5, 0.7, 41)
    v = np.sin(3 * t)
    h = _line(t, v)
    for tk, vk in zip(t[::7], v[::7]):
        assert abs(h.query(tk) - vk) < 1e-14


def test_delayed_trace_constant_history():
    dly = bl.DelaySpec(tau0=0.3, M=0.3, d=0.0)
    h = _line(np.linspace(-0.3, 1.0, 50), np.full(50, 2.5), M=0.3)
    assert abs(bl.delayed_trace(h, dly, 0.9) - 2.5) < 1e-14


def test_delayed_trace_affine_data_exact():
    # linear interpolation is exact on affine data
    dly = bl.DelaySpec(tau0=0.5, M=0.5, d=0.0)
    t = np.linspace(-0.5, 2.0, 26)
    h = _line(t, t, interpolation="linear")
    assert abs(bl.delayed_trace(h, dly, 2.0) - 1.5) < 1e-14


def test_delayed_trace_sin_accuracy():
    dly = bl.DelaySpec(tau0=0.3, M=0.3, d=0.0)
    t = np.arange(-0.3, 1.0 + 1e-12, 1e-3)
    h = _line(t, np.sin(t), M=0.3)
    assert abs(bl.delayed_trace(h, dly, 1.0) - np.sin(0.7)) < 1e-6


def test_underrun_raises():
    dly = bl.DelaySpec(tau0=0.5, M=0.5, d=0.0)
    h = _line([-0.1, 0.0], [0.0, 0.0])
    with pytest.raises(HistoryUnderrunError):
        bl.delayed_trace(h, dly, 0.0)   # needs t = -0.5


def test_z_profile_zero():
    dly = bl.DelaySpec(tau0=0.5, M=0.5, d=0.0)
    h = _line(np.linspace(-0.5, 0.5, 21), np.zeros(21))
    zp = bl.z_profile(h, dly, 0.5, 8)
    assert np.all(zp.values == 0.0)


def test_z_profile_affine_example():
    dly = bl.DelaySpec(tau0=1.0, M=1.0, d=0.0)
    t = np.linspace(-1.0, 1.0, 81)
    h = _line(t, t, M=1.0, interpolation="linear")
    zp = bl.z_profile(h, dly, 1.0, 4)
    assert np.allclose(zp.values, [1.0, 0.75, 0.5, 0.25, 0.0], atol=1e-14)


def test_z_profile_endpoint_identities():
    dly = bl.DelaySpec(tau0=0.4, M=0.4, d=0.0)
    t = np.arange(-0.4, 1.2 + 1e-12, 5e-3)
    h = _line(t, np.cos(2 * t), M=0.4)
    zp = bl.z_profile(h, dly, 1.2, 16)
    assert abs(zp.values[0] - h.query(1.2)) < 1e-14
    assert abs(zp.values[-1] - bl.delayed_trace(h, dly, 1.2)) < 1e-14


def test_transport_residual_trivial_cases():
    dly = bl.DelaySpec(tau0=0.5, M=0.5, d=0.0)
    t = np.linspace(-0.5, 1.0, 61)
    assert bl.transport_residual(_line(t, np.zeros(61)), dly, 0.4, 8) == 0.0
    assert bl.transport_residual(_line(t, np.full(61, 3.0)), dly, 0.4, 8) < 1e-12


def test_transport_residual_convergence():
    # analytic trace sin t, constant tau: z = sin(t - tau rho) solves the
    # transport equation exactly; residual is pure discretization error
    dly = bl.DelaySpec(tau0=0.5, M=0.5, d=0.0)
    res = []
    ms = (8, 16, 32)
    for m in ms:
        dt_samp = 0.5 / (8 * m)
        t = np.arange(-0.5, 1.5 + 1e-12, dt_samp)
        h = _line(t, np.sin(t), M=0.5)
        res.append(bl.transport_residual(h, dly, 0.8, m, dt_fd=0.7 * 0.5 / m))
    orders = [np.log2(res[i] / res[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9, (res, orders)
