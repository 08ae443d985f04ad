"""Acceptance gate: one test (or test group) per release criterion.

Each test prints one `[PASS]`/`[FAIL]` line with the measured quantities, then
asserts at the criterion's stated tolerance. Three sub-checks encode expected
qualitative MISE orderings that the composite estimator's own sampling theory
contradicts at this scale (the tail-index estimate enters the inverse
transform with a sensitivity that is an order of magnitude larger at weak
dependence, so weak-dependence MISE dominates); they are implemented
faithfully and fail with the measured tables rather than being loosened.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import ks_2samp

from randmax.depcore import (
    AlphaScaled,
    GevMargin,
    Independence,
    LimitLawQ,
    Logistic,
    astar_transform,
    edge_grid,
    edge_points,
    extremal_coefficient,
    lambda_inverse_link,
    pickands_from_astar,
)
from randmax.estimators import (
    EULER_MASCHERONI,
    CompositeConfig,
    composite_estimate,
    madogram_nu,
    pickands_angles,
    pickands_md,
)
from randmax.harness import (
    Combo,
    EstimatorPair,
    ExperimentConfig,
    figure_tables,
    results_csv_text,
    run_experiment,
    truth_curve,
    truth_model,
)
from randmax.samplers import (
    RngStream,
    sample_experiment1,
    sample_logistic_maxstable,
    sample_positive_stable,
    sample_spectral_scaled,
)
from randmax.specfun import student_t_cdf

SCALE_INDICES = (0.5, 0.633, 0.767, 0.9)
MASTER_SEED = 20260811


def _report(criterion, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}", flush=True)


# -- criterion 1 -------------------------------------------------------------


def test_criterion_01_transform_identities():
    """Scaling-transform round trips and iteration closure, 1e-12, < 1 s."""
    start = time.perf_counter()
    pts = edge_points(edge_grid(201))
    bases = [Logistic(p) for p in np.linspace(0.1, 1.0, 10)] + [Independence()]
    worst_round = 0.0
    for alpha in SCALE_INDICES:
        for base in bases:
            scaled = AlphaScaled(base, alpha)
            astar = lambda s, m=scaled, a=alpha: astar_transform(m, a, s)
            back = np.array([pickands_from_astar(astar, alpha, t) for t in pts])
            worst_round = max(worst_round, float(np.max(np.abs(back - base.values(pts)))))
    worst_closure = 0.0
    for a1, a2 in ((0.5, 0.9), (0.633, 0.767), (0.767, 0.5)):
        twice = AlphaScaled(AlphaScaled(Logistic(0.35), a1), a2)
        once = AlphaScaled(Logistic(0.35), a1 * a2)
        worst_closure = max(worst_closure, float(np.max(np.abs(twice.values(pts) - once.values(pts)))))
    elapsed = time.perf_counter() - start
    ok = worst_round < 1e-12 and worst_closure < 1e-12 and elapsed < 1.0
    _report(1, ok, f"round-trip {worst_round:.2e}, closure {worst_closure:.2e}, {elapsed:.2f}s")
    assert worst_round < 1e-12
    assert worst_closure < 1e-12
    assert elapsed < 1.0


# -- criterion 2 -------------------------------------------------------------


def test_criterion_02_extremal_coefficients():
    """theta power rule and lambda link at 1e-12; closed-form theta(Q) vs the
    matched-margin exponent evaluation at 1e-8, all four branches, < 5 s."""
    start = time.perf_counter()
    worst_pow = worst_lam = 0.0
    for psi in np.linspace(0.1, 1.0, 7):
        base = Logistic(psi)
        theta_g = extremal_coefficient(base)
        for alpha in SCALE_INDICES:
            theta_scaled = extremal_coefficient(AlphaScaled(base, alpha))
            worst_pow = max(worst_pow, abs(theta_scaled - theta_g**alpha))
            lam_x = lambda_inverse_link(2.0 - theta_scaled, alpha)
            worst_lam = max(worst_lam, abs(lam_x - (2.0 - theta_g)))
    worst_q = 0.0
    margins = (GevMargin("frechet"), GevMargin("frechet"))
    for base in (Logistic(0.5), Logistic(0.9), Independence()):
        for alpha, branch, y_star in (
            (0.3, "frechet", 1.0),
            (0.5, "frechet", 1.0),
            (0.9, "frechet", 1.0),
            (1.0, "frechet", 1.0),  # logarithmic-integral branch
            (1.5, "frechet", 1.0),
            (3.0, "frechet", 1.0),
            (0.5, "gumbel", 0.0),
        ):
            law = LimitLawQ(base, margins, alpha, branch)
            worst_q = max(worst_q, abs(law.theta() - law.neg_log_q(np.ones(2), y_star)))
    light = LimitLawQ(Logistic(0.5), margins, 1.5, "frechet").theta()
    gumbel = LimitLawQ(Independence(), margins, 0.5, "gumbel").theta()
    elapsed = time.perf_counter() - start
    ok = (
        worst_pow < 1e-12
        and worst_lam < 1e-12
        and worst_q < 1e-8
        and abs(light - 2.4142135624) < 1e-9
        and abs(gumbel - 3.0) < 1e-12
        and elapsed < 5.0
    )
    _report(
        2,
        ok,
        f"power rule {worst_pow:.2e}, lambda link {worst_lam:.2e}, "
        f"theta(Q) vs exponent {worst_q:.2e}, {elapsed:.2f}s",
    )
    assert worst_pow < 1e-12
    assert worst_lam < 1e-12
    assert worst_q < 1e-8
    assert abs(light - 2.4142135624) < 1e-9
    assert abs(gumbel - 3.0) < 1e-12
    assert elapsed < 5.0


# -- criterion 3 -------------------------------------------------------------


def test_criterion_03_margin_collapse():
    """Exponent of Q at y = 1e6 reproduces the margin exponents at 1e-8."""
    margins = (GevMargin("frechet"), GevMargin("frechet"))
    xs = [0.6, 0.9, 1.3, 2.0, 3.5]
    worst = 0.0
    for base in (Logistic(0.5), Logistic(0.8)):
        for alpha in (0.3, 0.5, 0.9, 1.0, 1.5, 3.0):
            law = LimitLawQ(base, margins, alpha, "frechet")
            for xv in xs:
                x = np.array([xv, 1.3])
                m = law.neg_log_g(x)
                target = m**alpha if alpha < 1.0 else m
                worst = max(worst, abs(law.neg_log_q(x, 1e6) - target))
        gum = LimitLawQ(base, margins, 0.5, "gumbel")
        for xv in xs:
            x = np.array([xv, 1.3])
            worst = max(worst, abs(gum.neg_log_q(x, 1e6) - gum.neg_log_g(x)))
    ok = worst < 1e-8
    _report(3, ok, f"largest deviation from margin exponent {worst:.2e}")
    assert worst < 1e-8


# -- criterion 4 -------------------------------------------------------------


def test_criterion_04_sampler_calibration():
    """Laplace transform within 3 MC standard errors, logistic extremal
    coefficient within 0.02, spectral vs direct construction KS at 1%, < 60 s."""
    start = time.perf_counter()
    details = []
    worst_sigma = 0.0
    for alpha in (0.5, 0.9):
        s = sample_positive_stable(alpha, RngStream(MASTER_SEED, 40 + int(10 * alpha)), 100_000)
        for sv in (0.5, 1.0, 2.0):
            vals = np.exp(-sv * s)
            se = vals.std(ddof=1) / np.sqrt(vals.size)
            dev = abs(vals.mean() - np.exp(-(sv**alpha))) / se
            worst_sigma = max(worst_sigma, dev)
    details.append(f"Laplace worst {worst_sigma:.2f} se")
    worst_theta = 0.0
    for i, psi in enumerate((0.3, 0.5, 0.8, 1.0)):
        z = sample_logistic_maxstable(psi, 2, RngStream(MASTER_SEED, 50 + i), 100_000)
        u = np.exp(-1.0 / z)
        nu = np.abs(u[:, 0] - u[:, 1]).mean() / 2.0
        theta = (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu)
        worst_theta = max(worst_theta, abs(theta - 2.0**psi))
    details.append(f"logistic theta worst {worst_theta:.4f}")
    spectral = sample_spectral_scaled(0.5, RngStream(MASTER_SEED, 60), 10_000, base_psi=1.0)
    direct = sample_experiment1(1.0, 0.5, 10_000, RngStream(MASTER_SEED, 61))
    pvalue = ks_2samp(spectral.max(axis=1), direct.xi).pvalue
    details.append(f"KS p = {pvalue:.3f}")
    elapsed = time.perf_counter() - start
    details.append(f"{elapsed:.1f}s")
    ok = worst_sigma <= 3.0 and worst_theta < 0.02 and pvalue > 0.01 and elapsed < 60.0
    _report(4, ok, ", ".join(details))
    assert worst_sigma <= 3.0
    assert worst_theta < 0.02
    assert pvalue > 0.01
    assert elapsed < 60.0


# -- criterion 5 -------------------------------------------------------------


def test_criterion_05_gpwm_exactness():
    """Moment-ratio identity under quadrature at 1e-10 where alpha > 1/(k-1)."""
    start = time.perf_counter()
    worst = 0.0
    checked = 0
    for alpha in (0.3, 0.5, 0.7, 0.9):
        for k in (4, 5, 6):
            if alpha <= 1.0 / (k - 1):
                continue
            mu = lambda b: quad(
                lambda v: v * (-np.log(v)) ** (b - 1.0 / alpha),
                0.0,
                1.0,
                epsabs=1e-14,
                epsrel=1e-13,
                limit=200,
            )[0]
            worst = max(worst, abs(1.0 / (k - 2.0 * mu(k) / mu(k - 1)) - alpha))
            checked += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 1.0 and checked == 11
    _report(5, ok, f"{checked} (alpha, k) pairs, worst {worst:.2e}, {elapsed:.2f}s")
    assert checked == 11
    assert worst < 1e-10
    assert elapsed < 1.0


# -- criterion 6 -------------------------------------------------------------

_PAIRS = tuple((p, a) for a in ("GPWM", "ML") for p in ("P", "CFG", "MD"))


def test_criterion_06_consistency_bound():
    """Every composite pair: sup|estimate - truth| < 0.05 at n = 10^4."""
    combo = Combo(1, 0.5, 0.5, float("nan"), 10_000)
    truth = truth_curve(combo, edge_grid(201))
    sample = sample_experiment1(0.5, 0.5, 10_000, RngStream(MASTER_SEED, 0))
    sups = {}
    for pick, alpha_method in _PAIRS:
        est = composite_estimate(sample, CompositeConfig(pick=pick, alpha_method=alpha_method))
        sups[est.label] = float(np.max(np.abs(est.a_star - truth)))
    ok = all(v < 0.05 for v in sups.values())
    _report(6, ok, "sup errors " + ", ".join(f"{k}={v:.4f}" for k, v in sups.items()))
    assert all(v < 0.05 for v in sups.values()), sups


@pytest.fixture(scope="module")
def consistency_wins():
    """100 seeded trials: does the n = 10^4 sup error beat the n = 10^3 one?"""
    combo = Combo(1, 0.5, 0.5, float("nan"), 10_000)
    truth = truth_curve(combo, edge_grid(201))
    wins = {f"{p}-{a}": 0 for p, a in _PAIRS}
    for trial in range(100):
        small = sample_experiment1(0.5, 0.5, 1_000, RngStream(500 + trial, 1))
        large = sample_experiment1(0.5, 0.5, 10_000, RngStream(500 + trial, 2))
        for pick, alpha_method in _PAIRS:
            cfg = CompositeConfig(pick=pick, alpha_method=alpha_method)
            sup_small = np.max(np.abs(composite_estimate(small, cfg).a_star - truth))
            sup_large = np.max(np.abs(composite_estimate(large, cfg).a_star - truth))
            wins[cfg.label] += bool(sup_large < sup_small)
    return wins


def test_criterion_06_size_comparison_gpwm(consistency_wins):
    table = {k: v for k, v in consistency_wins.items() if k.endswith("GPWM")}
    ok = all(v >= 95 for v in table.values())
    _report(6, ok, "n=1e4 beats n=1e3 (GPWM pairs): " + str(table))
    assert all(v >= 95 for v in table.values()), table


def test_criterion_06_size_comparison_ml(consistency_wins):
    # The unit-scale likelihood fit of the tail index carries an asymptotic
    # bias on pipeline-1 data (the row maximum has scale 2^psi), so its sup
    # error has a floor that the larger sample cannot beat reliably; measured
    # win rates sit near 75/100. Asserted at the stated threshold regardless.
    table = {k: v for k, v in consistency_wins.items() if k.endswith("ML")}
    ok = all(v >= 95 for v in table.values())
    _report(6, ok, "n=1e4 beats n=1e3 (ML pairs): " + str(table))
    assert all(v >= 95 for v in table.values()), (
        f"unit-scale ML tail fits have a scale-induced error floor on this "
        f"pipeline; measured wins {table}"
    )


# -- criterion 7 -------------------------------------------------------------


def test_criterion_07_population_oracles():
    """Exponential-angle and madogram population identities, 3 MC se at 1e5."""
    sample = sample_experiment1(0.5, 0.5, 100_000, RngStream(MASTER_SEED, 70))
    uniforms = np.exp(-sample.eta**-0.5)  # exact scaled-law margins
    scaled = AlphaScaled(Logistic(0.5), 0.5)
    worst = 0.0
    for t in (np.array([0.5, 0.5]), np.array([0.3, 0.7])):
        a = scaled.pickands(t)
        angles = pickands_angles(uniforms, t)
        se = angles.std(ddof=1) / np.sqrt(angles.size)
        worst = max(worst, abs(angles.mean() - 1.0 / a) / se)
        logs = np.log(angles)
        se_log = logs.std(ddof=1) / np.sqrt(logs.size)
        worst = max(worst, abs(logs.mean() - (-np.log(a) - EULER_MASCHERONI)) / se_log)
    gen = RngStream(MASTER_SEED, 71).generator()
    col = gen.random(100_000)
    dep = np.column_stack([col, col])
    t = np.array([0.5, 0.5])
    nu_dep = madogram_nu(dep, t)
    md_dep = pickands_md(dep, t)
    indep = gen.random((100_000, 2))
    powered = np.maximum(indep[:, 0], indep[:, 1]) ** 2.0 - 0.5 * (
        indep[:, 0] ** 2.0 + indep[:, 1] ** 2.0
    )
    se_nu = powered.std(ddof=1) / np.sqrt(powered.size)
    nu_dev = abs(madogram_nu(indep, t) - 1.0 / 6.0) / se_nu
    md_indep = pickands_md(indep, t)
    ok = (
        worst <= 3.0
        and nu_dep == 0.0
        and abs(md_dep - 0.5) < 1e-12
        and nu_dev <= 3.0
        and abs(md_indep - 1.0) <= 3.0 * se_nu * 4.0  # |dA/dnu| = 4 at independence
    )
    _report(
        7,
        ok,
        f"angle identities worst {worst:.2f} se, complete-dep nu {nu_dep}, "
        f"indep nu dev {nu_dev:.2f} se, indep madogram {md_indep:.4f}",
    )
    assert worst <= 3.0
    assert nu_dep == 0.0 and abs(md_dep - 0.5) < 1e-12
    assert nu_dev <= 3.0
    assert abs(md_indep - 1.0) <= 12.0 * se_nu


# -- criterion 8 -------------------------------------------------------------


@pytest.fixture(scope="module")
def figure1_results():
    config = ExperimentConfig(
        experiment=1,
        alphas=(0.5,),
        psis=(0.1, 0.55, 1.0),
        sizes=(50,),
        replications=200,
        pairs=tuple(EstimatorPair(p, "GPWM") for p in ("P", "CFG", "MD")),
        seed=MASTER_SEED,
        jobs=1,
    )
    start = time.perf_counter()
    results = run_experiment(config)
    elapsed = time.perf_counter() - start
    return results, elapsed


def _figure1_table(results):
    table = {}
    for r in results:
        table[(r.combo.psi_or_rho, r.pair.pick)] = r
    return table


def test_criterion_08_desk_run_and_iv_ordering(figure1_results):
    results, elapsed = figure1_results
    table = _figure1_table(results)
    iv_ok = all(
        table[(0.1, p)].iv < table[(0.55, p)].iv < table[(1.0, p)].iv
        for p in ("P", "CFG", "MD")
    )
    failures = sum(r.failures for r in results)
    detail = (
        f"run {elapsed:.1f}s, failures {failures}, IV rows "
        + "; ".join(
            f"{p}: " + "/".join(f"{table[(psi, p)].iv * 1e3:.2f}" for psi in (0.1, 0.55, 1.0))
            for p in ("P", "CFG", "MD")
        )
    )
    ok = iv_ok and elapsed < 600.0
    _report("8 (IV ordering)", ok, detail)
    assert elapsed < 600.0
    assert iv_ok


def test_criterion_08_mise_ordering(figure1_results):
    # Expected: MISE strictly decreasing in psi. Measured: increasing — the
    # tail-estimate noise enters the inverse transform with a sensitivity
    # that is about an order of magnitude larger at weak dependence, so the
    # weak-dependence MISE dominates at n = 50 for every curve estimator.
    results, _ = figure1_results
    table = _figure1_table(results)
    rows = {
        p: [table[(psi, p)].mise for psi in (0.1, 0.55, 1.0)] for p in ("P", "CFG", "MD")
    }
    ok = all(m[0] > m[1] > m[2] for m in rows.values())
    detail = "MISE x1e3 " + "; ".join(
        f"{p}: " + "/".join(f"{v * 1e3:.2f}" for v in vals) for p, vals in rows.items()
    )
    _report("8 (MISE ordering)", ok, detail)
    assert ok, f"expected MISE decreasing in psi, measured {detail}"


def test_criterion_08_cfg_not_worse(figure1_results):
    results, _ = figure1_results
    table = _figure1_table(results)
    checks = {}
    for psi in (0.1, 0.55, 1.0):
        for other in ("P", "MD"):
            diff = table[(psi, "CFG")].ise - table[(psi, other)].ise
            se = diff.std(ddof=1) / np.sqrt(diff.size)
            checks[f"psi={psi} vs {other}"] = (float(diff.mean()), float(se))
    ok = all(d <= 2.0 * se for d, se in checks.values())
    detail = "; ".join(f"{k}: diff={d:.2e} se={se:.2e}" for k, (d, se) in checks.items())
    _report("8 (CFG best)", ok, detail)
    assert ok, f"CFG-based MISE not within 2 se of best: {detail}"


# -- criterion 9 -------------------------------------------------------------


@pytest.fixture(scope="module")
def figure3_results():
    import os

    config = ExperimentConfig(
        experiment=2,
        alphas=(0.5,),
        rhos=(-0.5, 0.5, 0.99),
        upsilons=(1.0,),
        sizes=(50,),
        replications=100,
        pairs=tuple(EstimatorPair(p, "GPWM") for p in ("P", "CFG", "MD")),
        seed=MASTER_SEED,
        jobs=min(8, os.cpu_count() or 1),
    )
    start = time.perf_counter()
    results = run_experiment(config)
    elapsed = time.perf_counter() - start
    return results, elapsed


def test_criterion_09_pipeline_and_truth(figure3_results):
    results, elapsed = figure3_results
    worst_bary = 0.0
    for rho in (-0.5, 0.5, 0.99):
        combo = Combo(2, 0.5, rho, 1.0, 50)
        theta = 2.0 * truth_model(combo).pickands([0.5, 0.5])
        target = 2.0 * student_t_cdf(np.sqrt(2.0 * (1.0 - rho) / (1.0 + rho)), 2.0)
        worst_bary = max(worst_bary, abs(theta - target))
    failures = sum(r.failures for r in results)
    ok = worst_bary < 1e-10 and elapsed < 1200.0 and failures == 0
    _report(
        "9 (pipeline/truth)",
        ok,
        f"run {elapsed:.0f}s, failures {failures}, truth barycenter dev {worst_bary:.2e}",
    )
    assert worst_bary < 1e-10
    assert elapsed < 1200.0


def test_criterion_09_mise_comparison(figure3_results):
    # Expected: near-complete dependence (rho = 0.99) has the largest MISE.
    # Measured: it has the smallest, for the same structural reason as the
    # pipeline-1 ordering (weak-dependence noise amplification dominates).
    results, _ = figure3_results
    table = {(r.combo.psi_or_rho, r.pair.pick): r.mise for r in results}
    rows = {
        p: {rho: table[(rho, p)] for rho in (-0.5, 0.5, 0.99)} for p in ("P", "CFG", "MD")
    }
    ok = all(row[0.99] > row[0.5] for row in rows.values())
    detail = "MISE x1e3 " + "; ".join(
        f"{p}: rho=-0.5/0.5/0.99 -> "
        + "/".join(f"{row[r] * 1e3:.2f}" for r in (-0.5, 0.5, 0.99))
        for p, row in rows.items()
    )
    _report("9 (MISE comparison)", ok, detail)
    assert ok, f"expected MISE(rho=0.99) > MISE(rho=0.5), measured {detail}"


# -- criterion 10 ------------------------------------------------------------


def test_criterion_10_determinism():
    from dataclasses import replace

    config = ExperimentConfig(
        experiment=1,
        alphas=(0.5,),
        psis=(0.5, 1.0),
        sizes=(50,),
        replications=8,
        pairs=(EstimatorPair("CFG", "GPWM"), EstimatorPair("P", "ML")),
        seed=MASTER_SEED,
        jobs=1,
    )
    serial = run_experiment(config)
    wide = run_experiment(replace(config, jobs=8))
    rerun = run_experiment(config)
    csv_serial = results_csv_text(serial)
    ok = (
        csv_serial == results_csv_text(wide)
        and csv_serial == results_csv_text(rerun)
        and figure_tables(serial) == figure_tables(wide)
    )
    _report(10, ok, "results and figure tables byte-identical at widths 1 and 8")
    assert csv_serial == results_csv_text(wide)
    assert csv_serial == results_csv_text(rerun)
    assert figure_tables(serial) == figure_tables(wide)
