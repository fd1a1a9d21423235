"""Acceptance gate: every criterion at a fixed tolerance, one line each.

Run with `pytest tests/test_acceptance.py -s` to see the pass/fail lines.
The two Monte Carlo trend runs are shared between criteria 4, 5, and 6;
criterion 8 uses its own small cells.
"""

import os
import time

import numpy as np
import pytest

from stackcast import (
    CandidateSpec,
    Dataset,
    GeneralNormal,
    GPrior,
    GridSpec,
    IsoNormalLogistic,
    IsotropicNormal,
    MultiT,
    emit_csv,
    expit,
    linear_defaults,
    logistic_defaults,
    loo_linear_closed_form,
    loo_linear_refit,
    map_logistic,
    neg_log_posterior_logistic,
    run_experiment,
    solve,
)
from stackcast.spectral import random_trial_report

from oracles import fd_gradient, grid_search_simplex_min, random_spd

WORKERS = min(8, os.cpu_count() or 1)


def _report(num, desc, ok, started, detail=""):
    elapsed = time.perf_counter() - started
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] criterion {num} ({desc}): {status} ({elapsed:.1f}s) {detail}")
    assert ok, f"criterion {num} failed: {desc} {detail}"


@pytest.fixture(scope="module")
def linear_trend():
    config = linear_defaults(
        grid=GridSpec(kind="g", lo=1e-2, hi=1e3, count=20),
        n_values=(50,),
        r2_grid=(0.2, 0.5, 0.8),
        replications=200,
        test_size=500,
        base_seed=20240,
        parallelism=WORKERS,
        record_timing=False,
    )
    started = time.perf_counter()
    result = run_experiment(config)
    return result, time.perf_counter() - started


@pytest.fixture(scope="module")
def logistic_trend():
    config = logistic_defaults(
        grid=GridSpec(kind="lambda", lo=1e-3, hi=10.0, count=20),
        n_values=(50,),
        r2_grid=(0.2, 0.5),
        replications=100,
        folds=10,
        test_size=500,
        base_seed=20241,
        parallelism=WORKERS,
        record_timing=False,
    )
    started = time.perf_counter()
    result = run_experiment(config)
    return result, time.perf_counter() - started


def test_criterion_1_loo_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(1001)
    worst = 0.0
    for trial in range(100):
        x = rng.standard_normal((30, 5))
        y = rng.standard_normal(30)
        data = Dataset(x=x, y=y)
        pick = trial % 3
        if pick == 0:
            prior = IsotropicNormal(float(rng.uniform(0.05, 20.0)))
        elif pick == 1:
            prior = GPrior(float(rng.uniform(0.01, 1000.0)))
        else:
            prior = GeneralNormal(random_spd(rng, 5))
        spec = CandidateSpec("linear", prior, float(rng.uniform(0.2, 3.0)), "c")
        closed = loo_linear_closed_form(data, spec)
        refit = loo_linear_refit(data, spec)
        worst = max(worst, float(np.max(np.abs(closed - refit) / (1.0 + np.abs(refit)))))
    ok = worst <= 1e-8 and time.perf_counter() - started < 10.0
    _report(1, "LOO closed form vs refit oracle", ok, started,
            f"max rel dev {worst:.2e}")


def test_criterion_2_qp_against_grid_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(1002)
    worst_gap = 0.0
    kkt_ok = True
    for trial in range(100):
        k = (2, 3, 5)[trial % 3]
        s = random_spd(rng, k, jitter=float(rng.uniform(0.01, 1.0)))
        wv = solve(s)
        _, f_star = grid_search_simplex_min(s)
        worst_gap = max(worst_gap, abs(wv.objective - f_star))
        tol = 1e-9 * (1.0 + np.trace(s) / k)
        kkt_ok = kkt_ok and wv.converged and wv.kkt_residual <= tol
    ok = worst_gap <= 1e-6 and kkt_ok and time.perf_counter() - started < 30.0
    _report(2, "simplex QP vs refined grid search", ok, started,
            f"max |obj gap| {worst_gap:.2e}")


def test_criterion_3_eigenvalue_bounds():
    started = time.perf_counter()
    summary = random_trial_report(trials=1000, seed=1003, tol=1e-9)
    ok = (
        summary["failures"] == 0
        and summary["worst_max_eig"] <= 1.0 + 1e-9
        and summary["worst_min_eig"] >= -1e-9
        and summary["worst_g_prior_error"] <= 1e-9
        and time.perf_counter() - started < 60.0
    )
    _report(3, "hat-matrix eigenvalue bounds, 1000 trials", ok, started,
            f"worst max eig {summary['worst_max_eig']:.12f}, "
            f"g-prior err {summary['worst_g_prior_error']:.1e}")


def test_criterion_4_oracle_inequality_counter(linear_trend, logistic_trend):
    started = time.perf_counter()
    violations = 0
    reps = 0
    for result, _ in (linear_trend, logistic_trend):
        for row in result.rows:
            violations += row.replications - row.oracle_ok
            reps += row.replications
    ok = violations == 0
    _report(4, "per-replication CV oracle inequality", ok, started,
            f"{violations} violations in {reps} replications")


def test_criterion_5_linear_trend(linear_trend):
    started = time.perf_counter()
    result, elapsed = linear_trend
    rows = {row.r2: row for row in result.rows}
    bounded = all(row.ratio <= 1.0 + 3.0 * row.mc_se for row in result.rows)
    se = max(rows[0.2].mc_se, rows[0.8].mc_se)
    ordered = rows[0.2].ratio < rows[0.8].ratio + 3.0 * se
    ok = bounded and ordered and elapsed < 300.0
    detail = ", ".join(
        f"r({r2:g})={rows[r2].ratio:.4f}+-{rows[r2].mc_se:.4f}" for r2 in sorted(rows)
    )
    _report(5, "linear ratio curve shape", ok, started,
            detail + f", run {elapsed:.0f}s")


def test_criterion_6_logistic_trend(logistic_trend):
    started = time.perf_counter()
    result, elapsed = logistic_trend
    bounded = all(row.ratio <= 1.0 + 3.0 * row.mc_se for row in result.rows)
    ok = bounded and elapsed < 900.0
    detail = ", ".join(
        f"r({row.r2:g})={row.ratio:.4f}+-{row.mc_se:.4f}" for row in result.rows
    )
    _report(6, "logistic ratio curve shape", ok, started,
            detail + f", run {elapsed:.0f}s")


def test_criterion_7_logistic_map_quality():
    started = time.perf_counter()
    rng = np.random.default_rng(1007)
    all_converged = True
    grad_ok = True
    fd_worst = 0.0
    for trial in range(100):
        p = int(rng.integers(2, 7))
        x = rng.standard_normal((40, p))
        y = (rng.random(40) < expit(x @ rng.standard_normal(p))).astype(float)
        y[0], y[1] = 0.0, 1.0
        data = Dataset(x=x, y=y, family="logistic")
        if trial % 2 == 0:
            prior = IsoNormalLogistic(float(rng.uniform(0.01, 10.0)))
        else:
            prior = MultiT(float(rng.uniform(1.0, 30.0)), random_spd(rng, p))
        fit = map_logistic(data, CandidateSpec("logistic", prior, 1.0, "m"))
        all_converged = all_converged and fit.converged
        grad_ok = grad_ok and (not fit.converged or fit.grad_norm <= 1e-8)
        if isinstance(prior, MultiT):
            beta = rng.standard_normal(p)
            _, grad = neg_log_posterior_logistic(beta, data, prior)

            def f(b):
                return neg_log_posterior_logistic(b, data, prior)[0]

            fd = fd_gradient(f, beta, h=1e-5)
            rel = float(np.max(np.abs(grad - fd) / (1.0 + np.abs(fd))))
            fd_worst = max(fd_worst, rel)
    ok = (
        all_converged and grad_ok and fd_worst <= 1e-4
        and time.perf_counter() - started < 30.0
    )
    _report(7, "logistic MAP gradients", ok, started,
            f"all converged {all_converged}, worst FD rel {fd_worst:.2e}")


def test_criterion_8_parallel_determinism(tmp_path):
    started = time.perf_counter()
    identical = True
    for family in ("linear", "logistic"):
        if family == "linear":
            base = linear_defaults(
                grid=GridSpec(kind="g", lo=1e-2, hi=1e3, count=20),
                n_values=(50,), r2_grid=(0.2,), replications=16,
                test_size=500, base_seed=20248, record_timing=False,
            )
        else:
            base = logistic_defaults(
                grid=GridSpec(kind="lambda", lo=1e-3, hi=10.0, count=10),
                n_values=(50,), r2_grid=(0.2,), replications=6,
                test_size=500, base_seed=20249, record_timing=False,
            )
        paths = []
        for workers in (1, 8):
            from dataclasses import replace

            result = run_experiment(replace(base, parallelism=workers))
            path = tmp_path / f"{family}_{workers}.csv"
            emit_csv(result, path)
            paths.append(path)
        identical = identical and paths[0].read_bytes() == paths[1].read_bytes()
    _report(8, "CSV byte-identical across parallelism 1 and 8", identical, started)
