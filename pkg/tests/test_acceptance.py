"""Acceptance suite: one test per criterion (or criterion part), each at its
stated tolerance and runtime budget. Every test records a pass/fail line;
the combined report is printed at the end of the pytest run.
"""

import math
import time

import numpy as np
import pytest

from raftjamsec.authn import (AuthRegistry, EveEnsemble, monte_carlo_auth, pfa_closed_form, pinned_realization,
                              pmc_closed_form, pmd_closed_form, roc_curve, sigma_from_lq, threshold_for_pfa)
from raftjamsec.coverage import (JammerAnnulus, laplace_check_points, laplace_interference,
                                 laplace_interference_quadrature)
from raftjamsec.expcli import main, run_experiment
from raftjamsec.expconfig import default_spec
from raftjamsec.netmodel import ChannelParams, DeploymentConfig, sample_field
from raftjamsec.raftsim import RoundConfig, consensus_probability, link_success_probabilities, majority_probability
from raftjamsec.specfun import hyp2f1, q_function, q_inverse

from oracles import laplace_reference


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0
        return False


# --- 1: special functions --------------------------------------------------------------


def test_criterion_1_hypergeometric_identities(acceptance):
    with Timer() as t:
        errs = [abs(hyp2f1(1.0, 0.5, 1.5, -1.0) / (math.pi / 4) - 1)]
        errs += [abs(hyp2f1(1.0, 1.0, 2.0, -y) / (math.log1p(y) / y) - 1) for y in (0.1, 1.0, 10.0, 100.0)]
    ok = max(errs) <= 1e-9 and t.seconds < 1.0
    acceptance.record(1, ok, f"2F1 identities max rel err {max(errs):.1e} (tol 1e-9, {t.seconds:.2f}s)")
    assert ok


def test_criterion_1_round_trip_where_resolvable(acceptance):
    x = np.linspace(-5.2, 6.0, 22401)
    with Timer() as t:
        err = float(np.max(np.abs(q_inverse(q_function(x)) - x)))
    ok = err <= 1e-10 and t.seconds < 1.0
    acceptance.record(1, ok, f"Q/Q^-1 round trip on [-5.2, 6] max err {err:.1e} (tol 1e-10)")
    assert ok


@pytest.mark.xfail(strict=True, reason="binary64 Q(x) near 1 cannot pin x to 1e-10 below x = -5.2")
def test_criterion_1_round_trip_full_range(acceptance):
    x = np.linspace(-6.0, 6.0, 24001)
    err = np.abs(q_inverse(q_function(x)) - x)
    worst = float(np.max(err))
    ok = worst <= 1e-10
    acceptance.record(1, ok, f"Q/Q^-1 round trip on [-6, 6] max err {worst:.1e} at x = {x[np.argmax(err)]:.2f} "
                             f"(tol 1e-10)", note="unattainable in binary64 below x = -5.2")
    assert ok


# --- 2: Laplace closed form against quadrature ---------------------------------------------


def test_criterion_2_laplace_closed_form_vs_quadrature(acceptance):
    worst_own = worst_ref = worst_zero = 0.0
    cells = 0
    with Timer() as t:
        for r, ch, jam in laplace_check_points():
            cells += 1
            if jam.z1 > 0:
                closed = laplace_interference(r, ch, jam)
                own = laplace_interference_quadrature(r, ch, jam)
                ref = laplace_reference(r, ch.gamma_dl, ch.beta_dl_linear, ch.alpha, jam.rho_jammer, jam.z1, jam.z2)
                worst_own = max(worst_own, abs(closed / own - 1))
                worst_ref = max(worst_ref, abs(closed / ref - 1))
            else:
                # z1 -> 0 overlap: quadrature path at z1 = 0 vs closed form just above the switch
                at_zero = laplace_interference(r, ch, jam)
                tiny = laplace_interference(r, ch, JammerAnnulus(1e-4 * jam.z2, jam.z2, jam.rho_jammer))
                worst_zero = max(worst_zero, abs(tiny / at_zero - 1))
    ok = worst_own <= 1e-6 and worst_ref <= 1e-6 and worst_zero <= 1e-5 and t.seconds < 30
    acceptance.record(2, ok, f"{cells} cells: max rel err {worst_own:.1e} vs own quadrature, {worst_ref:.1e} vs "
                             f"scipy quadrature (tol 1e-6), z1->0 overlap {worst_zero:.1e} (tol 1e-5), "
                             f"{t.seconds:.1f}s")
    assert ok


# --- 3 and 9: closed form vs Monte Carlo, determinism --------------------------------------------


@pytest.fixture(scope="module")
def validate_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("validate")
    runs = []
    for k in range(2):
        path = out / f"run{k}.csv"
        with Timer() as t:
            code = main(["validate", "--seed", "42", "--out", str(path)])
        runs.append((code, path.read_bytes(), t.seconds))
    return runs


def test_criterion_3_closed_form_vs_monte_carlo(acceptance, validate_runs):
    code, data, seconds = validate_runs[0]
    lines = data.decode().splitlines()
    header = lines[0].split(",")
    rows = np.array([ln.split(",") for ln in lines[1:]], dtype=float)
    dev = rows[:, [j for j, h in enumerate(header) if h.startswith("dev_")]]
    worst = float(np.max(np.abs(dev)))
    betas = rows[:, 0]
    ok = (code == 0 and worst <= 3.0 and dev.size == 7 * 3 * 3 and np.allclose(betas, np.arange(-30, 1, 5))
          and seconds < 300)
    acceptance.record(3, ok, f"{dev.size} points (DL/UL/joint x 7 beta x 3 rho_J, 1e5 trials): max |MC - cf| = "
                             f"{worst:.2f} std errors (tol 3), {seconds:.0f}s")
    assert ok


def test_criterion_9_validate_is_byte_identical(acceptance, validate_runs):
    (c1, a, _), (c2, b, _) = validate_runs
    ok = c1 == c2 == 0 and a == b
    acceptance.record(9, ok, f"validate --seed 42 twice: {len(a)} bytes, identical={a == b}")
    assert ok


# --- 4: curve shapes ------------------------------------------------------------------------


def _table(kind):
    table = run_experiment(default_spec(kind).with_overrides(trials=0))
    return table.columns, np.array(table.rows)


def test_criterion_4a_joint_coverage_in_beta_and_density(acceptance):
    with Timer() as t:
        cols, data = _table("coverage")
    curves = data[:, 1:4]  # rho_J = 1, 2, 4 rho_F
    in_beta = bool(np.all(np.diff(curves, axis=0) <= 0))
    in_rho = bool(np.all(np.diff(curves, axis=1) <= 0))
    ok = in_beta and in_rho
    acceptance.record(4, ok, f"(a) joint non-increasing in beta: {in_beta}, in rho_J: {in_rho} ({t.seconds:.1f}s)")
    assert ok


def test_criterion_4b_joint_coverage_in_jamming_area(acceptance):
    with Timer() as t:
        cols, data = _table("jamarea")
    ok = bool(np.all(np.diff(data[:, 1:], axis=0) <= 0))
    acceptance.record(4, ok, f"(b) joint non-increasing in z2 (z1 = 0, rho_fR = rho_J): {ok} ({t.seconds:.1f}s)")
    assert ok


def test_criterion_4c_jamming_distance(acceptance):
    with Timer() as t:
        cols, data = _table("jamdist")
    z1 = data[:, 0]
    parts, ok = [], True
    for beta in (-30, -20):
        dl, ul, joint = (data[:, cols.index(f"{q}@beta={beta}")] for q in ("cf_dl", "cf_ul", "cf_joint"))
        k = int(np.argmax(joint))
        good = bool(np.all(np.diff(ul) >= 0) and np.all(np.diff(dl) <= 0) and 0 < k < len(z1) - 1
                    and joint[k] > joint[0] and joint[k] > joint[-1])
        ok &= good
        parts.append(f"beta={beta}: UL up, DL down, joint peak at z1={z1[k]:g} m -> {good}")
    ok &= t.seconds < 120
    acceptance.record(4, ok, "(c) " + ", ".join(parts) + f" ({t.seconds:.1f}s)")
    assert ok


# --- 5: authentication closed forms vs Monte Carlo -----------------------------------------------


def _random_auth_config(rng):
    """M, N <= 8, sigma in [0.1, 2], epsilon from a target false-alarm rate.

    Fingerprints are spaced at least eps + 4 sigma apart, so the
    neighbour-acceptance term the false-alarm form leaves out stays below
    Q(4) per neighbour (far under the Monte Carlo resolution).
    """
    m = int(rng.integers(1, 9))
    n = int(rng.integers(1, 9))
    sigma = float(rng.uniform(0.1, 2.0))
    eps = threshold_for_pfa(float(rng.choice([0.01, 0.1, 0.3])), sigma)
    gaps = eps + 4 * sigma + rng.exponential(2 * sigma, m - 1)
    psi = 40.0 + np.concatenate(([0.0], np.cumsum(gaps)))
    priors = rng.dirichlet(np.ones(m))
    reg = AuthRegistry(rng.permutation(psi), sigma, eps, priors)
    eves = EveEnsemble(rng.uniform(psi.min() - 3 * sigma, psi.max() + 3 * sigma, n), rng.dirichlet(np.ones(n)))
    return reg, eves


def _dev(mc_mean, p, n):
    return abs(mc_mean - p) / max(math.sqrt(p * (1 - p) / n), 1.0 / n)


def test_criterion_5_auth_closed_forms_vs_monte_carlo(acceptance):
    rng = np.random.default_rng(20240605)
    draws = 1_000_000
    worst = {"pfa": 0.0, "pmd": 0.0, "pmc": 0.0}
    with Timer() as t:
        for k in range(20):
            reg, eves = _random_auth_config(rng)
            mc = monte_carlo_auth(reg, eves, draws, seed=k)
            worst["pfa"] = max(worst["pfa"], _dev(mc.pfa.mean, pfa_closed_form(reg), draws))
            worst["pmd"] = max(worst["pmd"], _dev(mc.pmd.mean, pmd_closed_form(reg, eves, "union"), draws))
            worst["pmc"] = max(worst["pmc"], _dev(mc.pmc.mean, pmc_closed_form(reg, "infinite"), draws))
    ok = max(worst.values()) <= 3.0 and t.seconds < 120
    acceptance.record(5, ok, "20 configs x 1e6 draws: max deviation " +
                      ", ".join(f"{k} {v:.2f}" for k, v in worst.items()) + f" std errors (tol 3), {t.seconds:.0f}s")
    assert ok


# --- 6: detection claim on the pinned realization ----------------------------------------------


def test_criterion_6_detection_above_95_percent(acceptance):
    with Timer() as t:
        real = pinned_realization()
        reg = real.registry(sigma_from_lq(10.0))
        pt = roc_curve(reg, real.eve_ensemble(), [0.1], draws=1_000_000, seed=42)[0]
    ok = pt.pd > 0.95 and pt.pd_mc > 0.95 and t.seconds < 30
    acceptance.record(6, ok, f"realization seed {real.seed}, LQ 10 dB, P_fa 0.1: P_d closed form {pt.pd:.4f}, "
                             f"MC {pt.pd_mc:.4f} +- {pt.pd_mc_std_error:.4f} (need > 0.95), {t.seconds:.1f}s")
    assert ok


# --- 7: error probabilities against link quality --------------------------------------------------


def test_criterion_7_error_probabilities_in_link_quality(acceptance):
    real = pinned_realization()
    eves = real.eve_ensemble()
    lqs = (0.0, 5.0, 10.0, 15.0, 20.0)
    pfa_ok = pmd_ok = pmc_ok = True
    with Timer() as t:
        for eps in (0.1, 0.5, 1.0):
            regs = [real.registry(sigma_from_lq(lq), eps) for lq in lqs]
            pfa_ok &= bool(np.all(np.diff([pfa_closed_form(r) for r in regs]) < 0))
            pmd_ok &= bool(np.all(np.diff([pmd_closed_form(r, eves, "union") for r in regs]) < 0))
        for lq in lqs:
            values = [pmc_closed_form(real.registry(sigma_from_lq(lq), eps)) for eps in (0.1, 0.5, 1.0)]
            pmc_ok &= len({v.hex() for v in values}) == 1
    ok = pfa_ok and pmd_ok and pmc_ok and t.seconds < 30
    acceptance.record(7, ok, f"fixed eps in {{0.1, 0.5, 1.0}}, LQ 0..20 dB: P_fa decreasing {pfa_ok}, "
                             f"P_md decreasing {pmd_ok}, P_mc bit-identical across eps {pmc_ok}")
    assert ok


# --- 8: consensus composition ---------------------------------------------------------------------


def test_criterion_8_consensus_vs_binomial_majority(acceptance):
    p = default_spec("consensus").params
    dep = DeploymentConfig(p["rho_follower"], p["radius"], p["field_seed"])
    jam = JammerAnnulus(50.0, 300.0, p["rho_follower"])
    fld = sample_field(dep, jam)
    parts, ok = [], True
    with Timer() as t:
        for beta in (-20.0, -10.0):
            ch = ChannelParams(beta_dl=beta, beta_ul=beta)
            link_p = link_success_probabilities(fld, ch, trials=20_000, seed=1)
            pred = majority_probability(link_p)
            est = consensus_probability(RoundConfig(fld, ch, seed=42), 10_000)
            diff = abs(est.mean - pred)
            ok &= diff <= 0.03
            parts.append(f"beta={beta:g} dB: MC {est.mean:.4f} vs majority {pred:.4f} (|diff| {diff:.4f})")
    ok &= t.seconds < 180
    acceptance.record(8, ok, f"{fld.n_followers} followers, {fld.n_jammers} jammers, 1e4 rounds: " + "; ".join(parts)
                      + f" (tol 0.03), {t.seconds:.0f}s")
    assert ok
