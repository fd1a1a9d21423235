import numpy as np

from stackcast.cli import main


def _toy_csv(path, n=40, seed=90, binary=False):
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal(n)
    x2 = rng.standard_normal(n)
    if binary:
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-(x1 - x2)))).astype(int)
        y[0], y[1] = 0, 1
    else:
        y = 2.0 * x1 - x2 + 0.5 * rng.standard_normal(n)
    lines = ["x1,x2,y"]
    lines += [f"{a},{b},{c}" for a, b, c in zip(x1, x2, y)]
    path.write_text("\n".join(lines) + "\n")


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_is_usage_error(capsys):
    assert main(["verify-lemma1", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_verify_lemma1_passes(capsys):
    assert main(["verify-lemma1", "--trials", "10", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "failures" in out and ": 0" in out


def test_stack_fit_linear_prints_simplex_weights(tmp_path, capsys):
    csv_path = tmp_path / "toy.csv"
    _toy_csv(csv_path)
    model_path = tmp_path / "model.json"
    code = main([
        "stack-fit", "--data", str(csv_path), "--outcome", "y",
        "--prior", "iso", "--grid", "0.1:10:4", "--out", str(model_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "best candidate" in out
    weights = [
        float(line.split()[1])
        for line in out.splitlines()
        if line.strip().startswith("gamma2=")
    ]
    assert len(weights) == 4
    assert all(w >= 0.0 for w in weights)
    assert abs(sum(weights) - 1.0) <= 1e-9
    assert model_path.exists()


def test_stack_fit_then_predict(tmp_path, capsys):
    csv_path = tmp_path / "toy.csv"
    _toy_csv(csv_path, binary=True)
    model_path = tmp_path / "model.json"
    assert main([
        "stack-fit", "--data", str(csv_path), "--outcome", "y",
        "--prior", "iso", "--grid", "0.05:5:3", "--folds", "4",
        "--out", str(model_path),
    ]) == 0
    capsys.readouterr()
    assert main([
        "predict", "--model", str(model_path), "--data", str(csv_path),
        "--outcome", "y",
    ]) == 0
    preds = [float(v) for v in capsys.readouterr().out.split()]
    assert len(preds) == 40
    assert all(0.0 < p < 1.0 for p in preds)


def test_t_prior_on_linear_data_is_usage_error(tmp_path, capsys):
    csv_path = tmp_path / "toy.csv"
    _toy_csv(csv_path)
    assert main([
        "stack-fit", "--data", str(csv_path), "--outcome", "y",
        "--prior", "t", "--grid", "1,2:0.5",
    ]) == 1
    capsys.readouterr()


def test_missing_data_file_is_runtime_error(tmp_path, capsys):
    assert main([
        "stack-fit", "--data", str(tmp_path / "nope.csv"), "--outcome", "y",
        "--prior", "iso", "--grid", "0.1:1:2",
    ]) == 2
    capsys.readouterr()


def test_verification_failure_is_exit_3(monkeypatch, capsys):
    import stackcast.cli as cli

    def fake_report(trials, seed):
        return {
            "trials": trials, "failures": 2, "worst_max_eig": 1.5,
            "worst_min_eig": -1.0, "worst_g_prior_error": 0.0, "tolerance": 1e-9,
        }

    monkeypatch.setattr(cli, "random_trial_report", fake_report)
    assert main(["verify-lemma1", "--trials", "5"]) == 3
    assert "verification failed" in capsys.readouterr().err


def test_simulate_linear_with_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "n_values = 15\n"
        "r2_grid = 0.5\n"
        "replications = 2\n"
        "grid_count = 3\n"
        "test_size = 20\n"
        "q = 40\n"
        "p_fit = 4\n"
    )
    out_csv = tmp_path / "out.csv"
    out_svg = tmp_path / "out.svg"
    code = main([
        "simulate-linear", "--config", str(cfg), "--out-csv", str(out_csv),
        "--out-svg", str(out_svg), "--seed", "5", "--no-timing",
    ])
    assert code == 0
    text = out_csv.read_text()
    assert text.startswith("family,prior_family,n,r2,")
    assert out_svg.read_text().lstrip().startswith("<?xml")
    capsys.readouterr()
