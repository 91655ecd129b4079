import math
from dataclasses import replace

import numpy as np
import pytest

import bousslab as bl
from bousslab.certificate import mu1_interval_right, zeta_overshoot
from bousslab.errors import (CertificationError, ConfigurationError,
                             InadmissibleGainsError)

P_EX = bl.SystemParams(a=1.0, a1=1.0, L=1.0, alpha=2.0, beta=1.0)
D_EX = bl.DelaySpec(tau0=0.5, M=1.0, d=0.0)


def test_gain_example():
    ok, Phi, thr = bl.check_gains(P_EX, D_EX)
    assert ok
    assert thr == 1.0
    assert np.allclose(Phi, [[-3.0, -1.0], [-1.0, -1.0]])
    assert abs(np.linalg.det(Phi) - 2.0) < 1e-14
    assert np.all(np.linalg.eigvalsh(Phi) < 0)


def test_gain_equality_case_rejected():
    p = replace(P_EX, alpha=1.0)
    ok, Phi, thr = bl.check_gains(p, D_EX)
    assert not ok
    assert abs(np.linalg.det(Phi)) < 1e-14


def test_beta_zero_degenerate_rule():
    p = bl.SystemParams(a=1.0, a1=1.0, L=1.0, alpha=0.3, beta=0.0)
    ok, Phi, thr = bl.check_gains(p, D_EX)
    assert ok and thr == 0.0
    assert not bl.check_gains(replace(p, alpha=-0.1), D_EX)[0]


def test_negative_definiteness_matches_eigenvalue_oracle():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a1 = float(rng.uniform(0.2, 3.0))
        beta = float(rng.uniform(-2.0, 2.0))
        d = float(rng.uniform(0.0, 0.9))
        p = bl.SystemParams(a=1.0, a1=a1, L=1.0,
                            alpha=float(rng.uniform(-1.0, 6.0)), beta=beta)
        dly = bl.DelaySpec(tau0=0.4, M=0.6, d=d)
        ok, Phi, thr = bl.check_gains(p, dly)
        if beta != 0.0:
            eigs = np.linalg.eigvalsh(Phi)
            assert ok == bool(np.all(eigs < 0)), (p, dly, eigs)
            assert ok == (p.alpha > thr)


def test_decay_constants_example():
    # (L, a, a1, mu1, mu2, d, M) = (1, 1, 1, 0.1, 0.5, 0, 1)
    p = bl.SystemParams(a=1.0, a1=1.0, L=1.0, alpha=2.0, beta=1.0)
    dly = bl.DelaySpec(tau0=0.5, M=1.0, d=0.0)
    lam, zeta, info = bl.decay_constants(p, dly, 0.1, 0.5)
    assert abs(lam - 1.0 / 3.0) < 1e-10
    assert abs(zeta - 3.0) < 1e-10
    exact_first = 0.1 * math.pi ** 2 * (5 * math.pi ** 2 - 3) / 1.1
    assert abs(info["bracket_first"] - exact_first) < 1e-10
    assert abs(info["bracket_first"] - 41.584) < 5e-3


def test_decay_constants_mu1_zero():
    lam, zeta, info = bl.decay_constants(P_EX, D_EX, 0.0, 0.5)
    assert lam == 0.0


def test_decay_constants_second_bracket_formula():
    mu2 = 0.8
    lam, _, info = bl.decay_constants(P_EX, D_EX, 0.2, mu2)
    assert abs(info["bracket_second"] - mu2 * 1.0 / (1.0 * (1 + mu2))) < 1e-14


def test_decay_refused_out_of_range_L():
    p = bl.SystemParams(a=1.0, a1=1.0, L=5.0, alpha=2.0, beta=1.0)
    with pytest.raises(CertificationError):
        bl.decay_constants(p, D_EX, 0.1, 0.5)


def test_f_g_interval_examples():
    # a1=1, alpha=2, beta=1, d=0, L=1, M=1
    right = mu1_interval_right(P_EX, D_EX)
    assert abs(right - 0.4) < 1e-14
    assert bl.f_of_mu1(P_EX, 0.0) == 0.0
    assert abs(bl.g_of_mu1(P_EX, D_EX, 0.0) - 2.0 / 3.0) < 1e-14
    assert abs(bl.g_of_mu1(P_EX, D_EX, 0.4)) < 1e-13


def test_g_domain_error():
    with pytest.raises(ConfigurationError):
        bl.g_of_mu1(P_EX, D_EX, 0.5)


def test_f_g_monotonicity_sampling():
    mus = np.linspace(0.0, 0.4, 1000)
    f = np.array([bl.f_of_mu1(P_EX, float(m)) for m in mus])
    g = np.array([bl.g_of_mu1(P_EX, D_EX, float(m)) for m in mus])
    assert np.all(np.diff(f) > 0)
    assert np.all(np.diff(g) < 0)


def test_optimal_mu1_bisection_in_interval():
    mu1s, lam_star = bl.optimal_mu1(P_EX, D_EX)
    assert 0.0 < mu1s < 0.4
    assert abs(bl.f_of_mu1(P_EX, mu1s) - bl.g_of_mu1(P_EX, D_EX, mu1s)) < 1e-11
    assert abs(lam_star - bl.f_of_mu1(P_EX, mu1s)) < 1e-14


def test_optimal_mu1_unique_sign_change_random_draws():
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(60):
        a1 = float(rng.uniform(0.3, 2.0))
        beta = float(rng.uniform(0.05, 1.0)) * float(rng.choice([-1, 1]))
        d = float(rng.uniform(0.0, 0.8))
        thr = (abs(beta) / (2 * a1)) * ((a1 ** 2 + 1 - d) / (1 - d))
        alpha = thr * float(rng.uniform(1.2, 4.0))
        a = float(rng.uniform(0.1, 1.0))
        Lmax = math.pi * math.sqrt(5 * a1 / (3 * a))
        L = 0.7 * Lmax
        p = bl.SystemParams(a=a, a1=a1, L=L, alpha=alpha, beta=beta)
        dly = bl.DelaySpec(tau0=0.3, M=float(rng.uniform(0.3, 2.0)), d=d)
        right = mu1_interval_right(p, dly)
        if right <= 0:
            continue
        mus = np.linspace(0.0, right * (1 - 1e-12), 400)
        F = np.array([bl.f_of_mu1(p, float(m)) - bl.g_of_mu1(p, dly, float(m))
                      for m in mus])
        signs = np.sign(F)
        changes = np.count_nonzero(np.diff(signs[signs != 0]))
        assert changes == 1, (p, dly)
        mu1s, lam_star = bl.optimal_mu1(p, dly)
        assert 0 < mu1s < right
        hits += 1
    assert hits > 30


def test_optimality_sampling(acc_params, acc_delay):
    mu1s, lam_star = bl.optimal_mu1(P_EX, D_EX)
    mus = np.linspace(1e-6, 0.4 * (1 - 1e-9), 1000)
    vals = np.array([min(bl.f_of_mu1(P_EX, float(m)),
                         bl.g_of_mu1(P_EX, D_EX, float(m))) for m in mus])
    assert lam_star >= vals.max() - 1e-9


def test_choose_mu2_cases():
    # beta = 0: the mu2 perturbation of Psi vanishes; grid maximum returned
    p0 = bl.SystemParams(a=1.0, a1=1.0, L=1.0, alpha=0.5, beta=0.0)
    mu2 = bl.choose_mu2(p0, D_EX, 1e-3)
    assert mu2 == pytest.approx(0.99)
    # small mu1: Psi -> Phi negative definite, some mu2 > 0 feasible
    mu2 = bl.choose_mu2(P_EX, D_EX, 1e-3)
    assert mu2 > 0
    eigs = np.linalg.eigvalsh(bl.psi_matrix(P_EX, D_EX, 1e-3, mu2))
    assert np.all(eigs < 0)
    # inadmissible gains -> error
    with pytest.raises(InadmissibleGainsError):
        bl.choose_mu2(replace(P_EX, alpha=0.5), D_EX, 1e-3)


def test_psi_reduces_to_phi():
    Psi = bl.psi_matrix(P_EX, D_EX, 0.0, 0.0)
    assert np.allclose(Psi, bl.phi_matrix(P_EX, D_EX))


def test_zeta_limits():
    assert zeta_overshoot(P_EX, 0.2, 0.5) == pytest.approx(3.0)
    assert zeta_overshoot(P_EX, 1e-9, 1e-9) == pytest.approx(1.0, abs=1e-8)
    lam, zeta, _ = bl.decay_constants(P_EX, D_EX, 1e-9, 1e-9)
    assert lam < 1e-6 and zeta < 1.0 + 1e-8


def test_lambda_ignores_irrelevant_fields():
    # rate depends on nothing beyond (a, a1, L, d, M, alpha, beta, mu1, mu2)
    base = bl.decay_constants(P_EX, D_EX, 0.05, 0.3)[0]
    fuzz = replace(P_EX, alpha_p=2.2, beta_p=-3.3, rho_nl=0.7)
    dly = replace(D_EX, form="affine", rate=0.0, history=np.ones(9))
    assert bl.decay_constants(fuzz, dly, 0.05, 0.3)[0] == base


def test_certificate_document_fields(acc_params, acc_delay, acc_cert):
    doc = acc_cert.document()
    for key in ("admissible", "mu1_star", "lambda", "zeta", "bracket_first",
                "bracket_second", "bracket_first_proof_variant"):
        assert key in doc
    assert acc_cert.zeta > 1.0
    assert acc_cert.lam > 0.0
    assert acc_cert.lam <= acc_cert.lam_star + 1e-12
