from dataclasses import replace

import numpy as np
import pytest

from stackcast import (
    ExperimentConfig,
    GridSpec,
    build_candidates,
    emit_csv,
    linear_defaults,
    load_result_csv,
    logistic_defaults,
    run_experiment,
)
from stackcast.experiments import (
    CSV_HEADER,
    ExperimentResult,
    ResultRow,
    config_from_overrides,
    load_config_file,
)


def _tiny_linear(reps=3, parallelism=1, record_timing=False, **kw):
    return linear_defaults(
        grid=GridSpec(kind="g", lo=0.01, hi=100.0, count=4),
        n_values=(20,),
        r2_grid=(0.5,),
        replications=reps,
        test_size=30,
        q=60,
        p_fit=6,
        parallelism=parallelism,
        record_timing=record_timing,
        base_seed=123,
        **kw,
    )


def _tiny_logistic(reps=2, parallelism=1, **kw):
    return logistic_defaults(
        grid=GridSpec(kind="lambda", lo=0.01, hi=5.0, count=3),
        n_values=(30,),
        r2_grid=(0.3,),
        replications=reps,
        test_size=25,
        q=40,
        p_fit=4,
        folds=5,
        parallelism=parallelism,
        record_timing=False,
        base_seed=7,
        **kw,
    )


# ---- grids ----


def test_grid_values_linear_and_log():
    lin = GridSpec(kind="g", lo=1.0, hi=5.0, count=5)
    np.testing.assert_allclose(lin.values(), [1, 2, 3, 4, 5])
    log = GridSpec(kind="lambda", lo=0.01, hi=100.0, count=5, spacing="log")
    np.testing.assert_allclose(log.values(), [0.01, 0.1, 1.0, 10.0, 100.0])


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(kind="g", lo=-1.0, hi=2.0, count=3)
    with pytest.raises(ValueError):
        GridSpec(kind="weird", lo=1.0, hi=2.0, count=3)
    with pytest.raises(ValueError):
        GridSpec(kind="t", nus=())


def test_t_grid_scale_resolution():
    grid = GridSpec(kind="t", nus=(1.0, 2.0), lam=0.5,
                    lam_by_r2={0.2: 0.2, 0.5: 0.1})
    assert grid.scale_for(0.2) == 0.2
    assert grid.scale_for(0.5) == 0.1
    with pytest.raises(KeyError):
        grid.scale_for(0.35)


def test_build_candidates_families():
    g = build_candidates(GridSpec(kind="g", lo=0.1, hi=1.0, count=3), "linear", 5, 1.0, 0.5)
    assert len(g) == 3 and all(s.family == "linear" for s in g)
    lam = build_candidates(GridSpec(kind="lambda", lo=0.1, hi=1.0, count=2),
                           "logistic", 5, 1.0, 0.5)
    assert all(s.family == "logistic" for s in lam)
    t = build_candidates(GridSpec(kind="t", nus=(1.0, 5.0), lam=0.3), "logistic", 4, 1.0, 0.5)
    assert t[0].prior.scale.shape == (4, 4)
    with pytest.raises(ValueError):
        build_candidates(GridSpec(kind="t", nus=(1.0,), lam=0.3), "linear", 4, 1.0, 0.5)
    with pytest.raises(ValueError):
        build_candidates(GridSpec(kind="g", lo=0.1, hi=1.0, count=2), "logistic", 4, 1.0, 0.5)


# ---- running ----


def test_single_candidate_ratio_exactly_one():
    config = replace(
        _tiny_linear(reps=1, record_timing=False),
        grid=GridSpec(kind="g", lo=1.0, hi=1.0, count=1),
    )
    result = run_experiment(config)
    assert result.rows[0].ratio == 1.0


def test_ratio_column_consistency():
    result = run_experiment(_tiny_linear(reps=4))
    for row in result.rows:
        assert row.ratio * row.mean_best_loss == pytest.approx(
            row.mean_stacked_loss, rel=1e-12
        )


def test_oracle_counter_equals_replications():
    result = run_experiment(_tiny_linear(reps=5))
    assert result.total_oracle_ok == result.total_replications


def test_parallel_determinism_linear(tmp_path):
    seq = run_experiment(_tiny_linear(reps=6, parallelism=1))
    par = run_experiment(_tiny_linear(reps=6, parallelism=4))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(seq, p1)
    emit_csv(par, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_parallel_determinism_logistic(tmp_path):
    seq = run_experiment(_tiny_logistic(reps=4, parallelism=1))
    par = run_experiment(_tiny_logistic(reps=4, parallelism=3))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(seq, p1)
    emit_csv(par, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_logistic_t_grid_runs():
    config = replace(
        _tiny_logistic(reps=2), grid=GridSpec(kind="t", nus=(2.0, 10.0), lam=0.2)
    )
    result = run_experiment(config)
    assert result.rows[0].prior_family == "t"
    assert result.rows[0].replications == 2


# ---- CSV ----


def test_emit_csv_header_and_empty(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv(ExperimentResult(rows=()), path)
    assert path.read_text() == CSV_HEADER + "\n"


def test_emit_csv_single_row(tmp_path):
    row = ResultRow(
        family="linear", prior_family="g", n=50, r2=0.2, replications=10,
        ratio=0.95, mc_se=0.01, mean_stacked_loss=1.9, mean_best_loss=2.0,
        wall_seconds=0.0,
    )
    path = tmp_path / "one.csv"
    emit_csv(ExperimentResult(rows=(row,)), path)
    lines = path.read_text().split("\n")
    assert lines[0] == CSV_HEADER
    assert lines[1] == "linear,g,50,0.2,10,0.95,0.01,1.9,2,0"
    assert lines[2] == ""


def test_csv_round_trip_idempotent(tmp_path):
    result = run_experiment(_tiny_linear(reps=3))
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    emit_csv(result, first)
    emit_csv(load_result_csv(first), second)
    assert first.read_bytes() == second.read_bytes()


# ---- config files ----


def test_load_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# logistic run\n"
        "family = logistic\n"
        "n_values = 30, 50\n"
        "r2_grid = 0.2, 0.5\n"
        "replications = 9\n"
        "grid = t\n"
        "t_nus = 1, 2, 3\n"
        "t_lambda_by_r2 = 0.2:0.2, 0.5:0.1\n"
        "record_timing = false\n"
    )
    overrides = load_config_file(path)
    config = config_from_overrides("logistic", overrides)
    assert config.n_values == (30, 50)
    assert config.replications == 9
    assert config.grid.kind == "t"
    assert config.grid.scale_for(0.5) == 0.1
    assert config.record_timing is False


def test_load_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("nonsense = 3\n")
    with pytest.raises(ValueError, match="nonsense"):
        load_config_file(path)


def test_config_defaults_follow_family():
    lin = linear_defaults()
    assert lin.grid.kind == "g"
    assert lin.r2_grid[0] == pytest.approx(0.2)
    assert lin.r2_grid[-1] == pytest.approx(0.8)
    logi = logistic_defaults()
    assert logi.grid.kind == "lambda"
    assert logi.r2_grid[-1] == pytest.approx(0.7)
    assert logi.folds == 10
    assert logi.test_size == 500


def test_threads_env_default(monkeypatch):
    from stackcast.experiments import default_threads

    monkeypatch.delenv("STACKCAST_THREADS", raising=False)
    assert default_threads() == 1
    monkeypatch.setenv("STACKCAST_THREADS", "6")
    assert default_threads() == 6
    assert _tiny_linear(parallelism=0).workers == 6
    monkeypatch.setenv("STACKCAST_THREADS", "zebra")
    with pytest.raises(ValueError):
        default_threads()


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(family="linear",
                         grid=GridSpec(kind="g", lo=1.0, hi=2.0, count=2),
                         r2_grid=())
    with pytest.raises(ValueError):
        ExperimentConfig(family="nope",
                         grid=GridSpec(kind="g", lo=1.0, hi=2.0, count=2),
                         r2_grid=(0.5,))
