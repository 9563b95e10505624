from dataclasses import replace

import pytest

import config
import main
from modules.csv_manager import read_header_pairs, read_report_rows
from modules.errors import UsageError
from modules.run_config import config_from_pairs, parse_config, parse_config_text

CONVERGE_ARGS = ["converge", "--q-schedule", "one-minus-inv-n", "--bn", "power:0.3333",
                 "--coeffs", "1", "--f", "e2", "--n", "10,100,1000"]


# ============================================================================
# PARSE CONFIG
# ============================================================================

def test_parse_converge_example():
    cfg = parse_config(CONVERGE_ARGS)
    assert cfg.command == "converge"
    assert cfg.qctx.schedule_id == "one_minus_inv_n"
    assert cfg.bn.kind == "power" and cfg.bn.param == 0.3333
    assert cfg.coeffs == (1.0,)
    assert cfg.n == (10, 100, 1000)
    assert cfg.function().id == "e2"


def test_defaults():
    cfg = parse_config(["bound"])
    assert cfg.qctx.schedule_id == config.DEFAULT_Q_SCHEDULE
    assert cfg.n == config.DEFAULT_N
    assert cfg.b == config.DEFAULT_B
    assert cfg.x is None and cfg.out is None
    assert cfg.truncation().tol_rel == config.TOL_REL


@pytest.mark.parametrize("args, key", [
    (["validate", "--q", "1.5"], "q"),
    (["validate", "--q", "abc"], "q"),
    (["bound", "--coeffs", "1,-1"], "coeffs"),
    (["eval", "--f", "exp"], "f"),
    (["eval", "--n", "100,10"], "n"),
    (["eval", "--n", "0,10"], "n"),
    (["eval", "--bn", "power:2"], "bn"),
    (["eval", "--q-schedule", "harmonic"], "q_schedule"),
    (["eval", "--kmax", "50"], "kmax"),
    (["eval", "--x", "-1"], "x"),
    (["converge", "--points", "16"], "points"),
    (["converge", "--alpha", "-0.5"], "alpha"),
    (["dance"], "command"),
    ([], "command"),
    (["eval", "--q", "0.5", "--q-schedule", "ratio"], "q"),
])
def test_usage_errors_name_the_key(args, key):
    with pytest.raises(UsageError) as excinfo:
        parse_config(args)
    assert excinfo.value.key == key


def test_argparse_errors_become_usage_errors():
    with pytest.raises(UsageError):
        parse_config(["eval", "--speed", "3"])


def test_positivity_warning(capsys):
    cfg = parse_config(["bound", "--coeffs", "1,-0.5"])
    assert cfg.coeffs == (1.0, -0.5)
    assert "not all nonnegative" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# sweep setup\ncommand = eval\nq = 0.5\nn = 5\ntol-rel = 1e-12\n", encoding="utf-8")
    cfg = parse_config(["--q", "0.7", "--config", str(path)])
    assert cfg.command == "eval"
    assert cfg.qctx.q_fixed == 0.7
    assert cfg.n == (5,)
    assert cfg.tol_rel == 1e-12


def test_flag_q_replaces_file_schedule(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("q-schedule = ratio\n", encoding="utf-8")
    cfg = parse_config(["converge", "--q", "0.5"], config_file=str(path))
    assert cfg.qctx.mode == "fixed" and cfg.qctx.q_fixed == 0.5


def test_unknown_config_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("command = eval\nspeed = 3\n", encoding="utf-8")
    with pytest.raises(UsageError, match="speed") as excinfo:
        parse_config([], config_file=str(path))
    assert excinfo.value.key == "speed"


def test_malformed_config_line():
    with pytest.raises(UsageError, match="line 2"):
        parse_config_text("command = eval\njust words\n")


def test_pairs_round_trip():
    cfg = parse_config(["converge", "--q", "0.9", "--bn", "log", "--coeffs", "1,0.5,0.25",
                        "--n", "3,7", "--x", "0.1,0.30000000000000004", "--alpha", "0.5",
                        "--points", "100", "--x-max", "2.5", "--tol-rel", "1e-12", "--kmax", "5000",
                        "--workers", "4", "--out", "ignored.csv"])
    assert config_from_pairs(cfg.to_pairs()) == replace(cfg, workers=config.DEFAULT_WORKERS, out=None)


# ============================================================================
# RUN
# ============================================================================

def test_validate_example(tmp_path):
    out = tmp_path / "validate.csv"
    status = main.main(["validate", "--q", "0.5", "--coeffs", "1", "--n", "5", "--x", "0.1,0.2,0.3",
                        "--out", str(out)])
    assert status == config.EXIT_OK
    text = out.read_text(encoding="utf-8")
    header = [line for line in text.splitlines() if not line.startswith("#")][0]
    assert header == "n,q,bn,x,r,closed,oracle,residual,status"
    rows = read_report_rows(text)
    assert len(rows) == 9
    assert {row["status"] for row in rows} == {"ok", "recorded"}


def test_report_goes_to_stdout_without_out(capsys):
    assert main.main(["moments", "--q", "0.5", "--n", "5", "--x", "0.2"]) == config.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("# command = moments\n")
    assert "n,q,bn,x,kind,r,closed,derived,oracle,residual,status" in out


def test_header_reparses_to_the_same_config(tmp_path):
    out = tmp_path / "eval.csv"
    args = ["eval", "--q", "0.8", "--coeffs", "1,1", "--f", "sin", "--n", "4,8", "--points", "5",
            "--out", str(out)]
    assert main.main(args) == config.EXIT_OK
    pairs = read_header_pairs(out.read_text(encoding="utf-8"))
    assert config_from_pairs(pairs) == replace(parse_config(args), out=None)


def test_bound_with_constant_function(tmp_path):
    out = tmp_path / "bound.csv"
    status = main.main(["bound", "--f", "e0", "--n", "10,20", "--b", "1,2", "--out", str(out)])
    assert status == config.EXIT_OK
    rows = read_report_rows(out.read_text(encoding="utf-8"))
    assert len(rows) == 4
    assert all(row["holds"] == "true" for row in rows)


def test_converge_is_deterministic_and_decreasing(tmp_path):
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert main.main(CONVERGE_ARGS + ["--points", "64", "--out", str(serial)]) == config.EXIT_OK
    assert main.main(CONVERGE_ARGS + ["--points", "64", "--workers", "3", "--out", str(parallel)]) == config.EXIT_OK
    assert serial.read_bytes() == parallel.read_bytes()

    text = serial.read_text(encoding="utf-8")
    errors = [float(row["weighted_error"]) for row in read_report_rows(text)]
    assert errors[0] > errors[1] > errors[2]
    assert "## weighted_error strictly decreasing in n: true" in text


def test_failed_rows_exit_with_failed_check(tmp_path):
    out = tmp_path / "validate.csv"
    status = main.main(["validate", "--q", "0.5", "--bn", "const:1", "--n", "5", "--x", "0.1,5",
                        "--out", str(out)])
    assert status == config.EXIT_FAILED_CHECK
    rows = read_report_rows(out.read_text(encoding="utf-8"))
    assert [row["status"] for row in rows if row["x"] == "5"] == ["failed"] * 3


def test_failures_are_logged():
    main.main(["validate", "--q", "0.5", "--bn", "const:1", "--n", "5", "--x", "5"])
    with open(config.FAILED_LOG, encoding="utf-8") as f:
        assert "DomainExceeded" in f.read()


def test_usage_exit_status():
    assert main.main(["validate", "--q", "1.5"]) == config.EXIT_USAGE
    assert main.main(["--bogus"]) == config.EXIT_USAGE


def test_io_exit_status(tmp_path):
    missing_dir = tmp_path / "missing" / "out.csv"
    assert main.main(["validate", "--q", "0.5", "--n", "5", "--x", "0.1", "--out", str(missing_dir)]) == config.EXIT_IO
    assert main.main(["--config", str(tmp_path / "nope.cfg")]) == config.EXIT_IO


def test_eval_with_classical_weights_at_large_n(tmp_path):
    out = tmp_path / "eval.csv"
    status = main.main(["eval", "--q", "1", "--n", "500", "--bn", "const:1", "--f", "e1", "--out", str(out)])
    assert status == config.EXIT_OK
    rows = read_report_rows(out.read_text(encoding="utf-8"))
    assert {row["status"] for row in rows} == {"ok"}
    assert max(float(row["x"]) for row in rows) == pytest.approx(20.0)


def test_converge_reports_tail_ratio_for_positive_alpha(tmp_path):
    out = tmp_path / "converge.csv"
    args = CONVERGE_ARGS[:-1] + ["10,100", "--alpha", "0.5", "--points", "64", "--out", str(out)]
    assert main.main(args) == config.EXIT_OK
    text = out.read_text(encoding="utf-8")
    assert all(float(row["tail_ratio"]) > 0 for row in read_report_rows(text))
    assert "## tail_ratio = sup P(1 + t^2)" in text


def test_unexpected_errors_exit_with_internal_status(monkeypatch):
    def broken(cfg):
        raise RuntimeError("weights went missing")

    monkeypatch.setattr(main, "build_report", broken)
    assert main.main(["validate", "--q", "0.5", "--n", "5", "--x", "0.1"]) == config.EXIT_INTERNAL
    with open(config.FAILED_LOG, encoding="utf-8") as f:
        assert "RuntimeError" in f.read()
