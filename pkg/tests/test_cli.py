from pathlib import Path

import pytest
import yaml

from parhybrid.cli import (
    EXIT_CONVERGED,
    EXIT_INVALID,
    EXIT_MAX_ITER,
    ConfigError,
    RunConfig,
    build_params,
    build_problem,
    main,
)
from parhybrid.methods import ParamsB
from parhybrid.trace import read_csv

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def _base(**kw):
    data = yaml.safe_load((CONFIGS / "section5.yaml").read_text())
    data.update(kw)
    return data


def test_converged_run_writes_trace(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    code = main(["--config", str(CONFIGS / "section5.yaml"), "--trace", str(trace)])
    assert code == EXIT_CONVERGED
    rows = read_csv(trace)
    assert rows[-1].x_norm <= 1e-6 and len(rows) <= 201
    assert "status=converged" in capsys.readouterr().out


def test_invalid_parameters_exit_code(tmp_path, capsys):
    cfg = _base(schedules={"lambda": 0.3, "alpha": 0.5, "r": 1.0}, bounds={"alpha_cap": 0.5})
    code = main(["--config", _write(tmp_path, cfg), "--trace", str(tmp_path / "t.csv")])
    assert code == EXIT_INVALID
    assert "lambda_n >= alpha c^2/2" in capsys.readouterr().err


def test_iteration_limit_exit_code(tmp_path):
    trace = tmp_path / "t.csv"
    code = main(["--config", str(CONFIGS / "section5.yaml"), "--tol", "0", "--max-iter", "10",
                 "--trace", str(trace), "--quiet"])
    assert code == EXIT_MAX_ITER
    assert len(read_csv(trace)) == 11


@pytest.mark.parametrize(
    "data",
    [
        {"problem": {"id": "section5"}, "method": "C", "schedules": {}},
        {"problem": {"id": "section5"}, "method": "A", "schedules": {"lambda": 0.2, "alpha": 0.5, "r": 1}},
        {"problem": {"id": "nowhere"}, "method": "mann", "schedules": {"lambda": 0.2, "alpha": 0.5}},
        {"problem": {"id": "section5"}, "method": "A-quasi", "schedules": {"lambda": "n +"}},
        {"problem": {"id": "section5"}, "method": "A-quasi", "schedules": {"lambda": 0.2}, "colour": 1},
        [1, 2, 3],
    ],
)
def test_bad_configs_exit_invalid(tmp_path, data):
    assert main(["--config", _write(tmp_path, data), "--trace", str(tmp_path / "t.csv")]) == EXIT_INVALID


def test_missing_file_and_bad_flags(tmp_path):
    assert main(["--config", str(tmp_path / "none.yaml")]) == EXIT_INVALID
    assert main(["--nonsense"]) == EXIT_INVALID


def test_bench_single_worker(tmp_path, capsys):
    cfg = yaml.safe_load((CONFIGS / "bench.yaml").read_text())
    cfg["problem"].update(M=4, N=4, K=4, eval_cost=0.0)
    cfg["bench"]["repeats"] = 1
    cfg["output"] = {"bench": str(tmp_path / "bench.csv")}
    code = main(["--config", _write(tmp_path, cfg), "--bench", "--bench-workers", "1"])
    assert code == EXIT_CONVERGED
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    assert lines[0] == "workers,wall_time_s,speedup"
    assert lines[1].startswith("1,") and float(lines[1].split(",")[2]) == 1.0
    assert "speedup" in capsys.readouterr().out


def test_bench_rejects_bad_worker_list(tmp_path):
    path = str(CONFIGS / "bench.yaml")
    assert main(["--config", path, "--bench", "--bench-workers", "0,2"]) == EXIT_INVALID


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.yaml")))
def test_shipped_configs_build(name):
    cfg = RunConfig.load(CONFIGS / name)
    problem = build_problem(cfg)
    build_params(cfg, problem)


def test_weights_mapping_expands_to_rows():
    cfg = RunConfig.load(CONFIGS / "section5_method_b.yaml")
    params = build_params(cfg, build_problem(cfg))
    assert isinstance(params, ParamsB)
    row = params.weight_schedule(0)
    assert row.sum() == pytest.approx(1.0) and row[0] == 0.5 and len(row) == 11
    with pytest.raises(ConfigError):
        bad = RunConfig.load(CONFIGS / "section5_method_b.yaml")
        bad.schedules["weights"] = {"beta": 1}
        build_params(bad, build_problem(bad))


def test_mann_config_converges(tmp_path):
    code = main(["--config", str(CONFIGS / "affine_mann.yaml"), "--trace", str(tmp_path / "t.csv"), "--quiet"])
    assert code == EXIT_CONVERGED
