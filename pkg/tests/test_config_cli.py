import json
from pathlib import Path

import pytest

from zcontract import config as cfgmod
from zcontract.cli import main
from zcontract.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

HALVING = """
[domain]
kind = "interval_grid"
lo = 0.0
hi = 1.0
n = 50

[metric]
expr = "abs(x - y)"

[map]
expr = "x/2"

[zeta]
family = "banach"
lambda = 0.6

[solver]
x0 = [1.0, 0.3]
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="cfg.toml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return _write


def test_loads_and_settings():
    cfg = cfgmod.loads(HALVING)
    s = cfgmod.solver_settings(cfg)
    assert s.x0 == (1.0, 0.3)
    assert s.step_tol == 1e-9 and s.window == 32


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[domian]\nkind = 'finite_set'", "unknown block"),
        ("[metric]\nexpr = 'x'\ncolour = 'red'", "unknown key"),
        ("[zeta]\nfamily = 'banach'", "needs lambda"),
        ("[zeta]\nfamily = 'banach'\nlambda = 0.5\nphi = 'half'", "do not apply"),
        ("[domain]\nkind = 'interval_grid'\nlo = 0\nhi = 1\nn = 2.5", "integer"),
        ("[domain]\nkind = 'interval_grid'\nlo = 0\nhi = 1", "needs n"),
        ("[solver]\nx0 = []", "empty"),
        ("[output]\nformat = 'xml'", "csv or json"),
        ("[metric\n", ""),
    ],
)
def test_config_rejections(text, fragment):
    with pytest.raises(ConfigError) as info:
        cfgmod.loads(text)
    assert fragment in str(info.value)


def test_shipped_configs_load():
    for p in sorted(CONFIGS.glob("*.toml")):
        cfgmod.load(p)


def test_exit_codes(write, tmp_path, capsys):
    assert main(["check", "--config", write(HALVING)]) == 0
    assert main(["check", "--config", str(CONFIGS / "identity.toml")]) == 1
    assert "witness" in capsys.readouterr().out
    assert main(["check", "--config", str(CONFIGS / "squared_metric.toml")]) == 1
    assert main(["verify-simfun", "--config", str(CONFIGS / "integral_zeta.toml")]) == 0
    assert main(["check"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["check", "--config", str(tmp_path / "missing.toml")]) == 2


def test_parse_error_reports_position(write, capsys):
    bad = HALVING.replace('expr = "x/2"', 'expr = "x/ "')
    assert main(["check", "--config", write(bad)]) == 2
    err = capsys.readouterr().err
    assert "[map]" in err and "position 3" in err


def test_bad_lambda_is_usage_error(write):
    assert main(["check", "--config", write(HALVING.replace("lambda = 0.6", "lambda = 1.5"))]) == 2


def test_s_minus_t_fails_axioms(write, capsys):
    p = write('[zeta]\nfamily = "custom"\nexpr = "s - t"\n')
    assert main(["verify-simfun", "--config", p]) == 1
    assert "zeta2" in capsys.readouterr().out


def test_solve_writes_traces(write, tmp_path):
    out = tmp_path / "traces"
    assert main(["solve", "--config", write(HALVING), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["summary.json", "trace_0.csv", "trace_1.csv"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["all_converged"] and summary["agree"]
    assert main(["solve", "--config", write(HALVING), "--out", str(tmp_path / "j"), "--format", "json"]) == 0
    tr = json.loads((tmp_path / "j" / "trace_0.json").read_text())
    assert tr["verdict"] == "converged"


def test_solve_max_iter_exceeded(write):
    assert main(["solve", "--config", write(HALVING + "max_iter = 3\n")]) == 1


def test_solve_gate_and_force(write):
    bad = HALVING.replace('expr = "x/2"', 'expr = "1 - x"')
    assert main(["solve", "--config", write(bad)]) == 1
    # forced: iteration runs but the period-2 orbit never converges
    assert main(["solve", "--config", write(bad + "max_iter = 100\n"), "--force"]) == 1
    no_zeta = HALVING.split("[zeta]")[0] + "[solver]\nx0 = 1.0\n"
    assert main(["solve", "--config", write(no_zeta)]) == 2
    assert main(["solve", "--config", write(no_zeta), "--force"]) == 0


def test_solve_start_outside_domain(write):
    assert main(["solve", "--config", write(HALVING.replace("x0 = [1.0, 0.3]", "x0 = 2.0"))]) == 2


def test_classify_output(write, tmp_path):
    out = tmp_path / "cls.json"
    assert main(["classify", "--config", write(HALVING), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["banach_lambda"] == 0.5


def test_reproduce_example2_small_grid(tmp_path):
    out = tmp_path / "ex2.json"
    assert main(["reproduce-example2", "--n", "100", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["passed"] and rec["converged_to_zero"]


def test_reproduce_example2_bad_zeta():
    assert main(["reproduce-example2", "--n", "50", "--zeta", "s - t"]) == 1
    assert main(["reproduce-example2", "--n", "50", "--zeta", "s -"]) == 2


def test_oracle_command(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "--count", "20", "--seed", "3", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["seed"] == 3


def test_outputs_byte_identical(write, tmp_path):
    cfg = write(HALVING)
    for k in (1, 2):
        assert main(["check", "--config", cfg, "--out", str(tmp_path / f"c{k}.json")]) == 0
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / f"s{k}")]) == 0
    assert (tmp_path / "c1.json").read_bytes() == (tmp_path / "c2.json").read_bytes()
    for name in ("summary.json", "trace_0.csv", "trace_1.csv"):
        assert (tmp_path / "s1" / name).read_bytes() == (tmp_path / "s2" / name).read_bytes()


def test_example2_config_commands(tmp_path, capsys):
    ex2 = str(CONFIGS / "example2.toml")
    assert main(["check", "--config", ex2]) == 0
    assert main(["classify", "--config", ex2]) == 0
    out = capsys.readouterr().out
    assert "discrepancy" in out and "ratio" in out
    truncated = (CONFIGS / "example2.toml").read_text().replace("x0 = [0.1, 0.3, 0.5, 0.9, 1.0]", "x0 = 0.5")
    truncated = truncated.replace("max_iter = 1000000", "max_iter = 3")
    p = tmp_path / "t.toml"
    p.write_text(truncated)
    assert main(["solve", "--config", str(p)]) == 1
    assert "max_iter_exceeded" in capsys.readouterr().out


def test_reproduce_coarse_grid():
    assert main(["reproduce-example2", "--n", "10"]) == 0
