# ============================================================================
# Q-FAVARD-SZASZ OPERATOR LAB - MAIN APPLICATION
# ============================================================================
# Command-line entry point: parse the run configuration, dispatch to the
# validation / experiment routines and write the CSV report
# ============================================================================

import sys
import traceback
from typing import Sequence

import config
from modules.approx_lab import (
    GridSpec, evaluation_run, strictly_decreasing, theorem3_suite, weighted_convergence_run,
)
from modules.csv_manager import ExperimentReport, write_report
from modules.errors import InvalidArgument, UsageError
from modules.log_utils import log_failure, log_message
from modules.operator_core import lemma_residual_report, params_family
from modules.run_config import RunConfig, parse_config

# ============================================================================
# COMMANDS
# ============================================================================

def build_report(cfg: RunConfig) -> ExperimentReport:
    """Run the command named in cfg and return its (unwritten) report."""
    pfamily = params_family(cfg.n, cfg.qctx, cfg.bn, cfg.coeffs, cfg.truncation())

    if cfg.command == "validate":
        report = lemma_residual_report(pfamily, xs=cfg.x, kinds=("raw",), workers=cfg.workers,
                                       points=cfg.points)
        report.notes.append("r = 2 residuals are recorded, not asserted")
    elif cfg.command == "moments":
        report = lemma_residual_report(pfamily, xs=cfg.x, kinds=("raw", "central"),
                                       workers=cfg.workers, points=cfg.points)
        report.notes.append("closed = reference closed form; derived = series summed in closed form")
    elif cfg.command == "eval":
        report = evaluation_run(pfamily, cfg.function(), xs=cfg.x, points=cfg.points)
    elif cfg.command == "converge":
        grid = GridSpec(cfg.x_max, cfg.points or config.SUP_GRID_POINTS)
        report = weighted_convergence_run(pfamily, cfg.function(), cfg.alpha, grid, cfg.workers)
        errors = [row["weighted_error"] for row in report.sorted_rows()]
        if None not in errors:
            decreasing = "true" if strictly_decreasing(errors) else "false"
            report.notes.append(f"weighted_error strictly decreasing in n: {decreasing}")
        if cfg.alpha > 0:
            report.notes.append(f"tail_ratio = sup P(1 + t^2) / (1 + x^2)^(1 + alpha) "
                                f"over [{config.TAIL_X0_FRACTION!r} x_max, x_max]")
    elif cfg.command == "bound":
        report = theorem3_suite(pfamily, [cfg.function()], cfg.b, cfg.workers)
        report.notes.append(f"holds = lhs <= {config.THEOREM3_SLACK!r} * rhs, N_f = {config.NF_FACTOR} M_f")
    else:
        raise UsageError(f"Unknown command '{cfg.command}'", key="command")

    report.metadata = cfg.to_pairs()
    return report


def exit_status(cfg: RunConfig, report: ExperimentReport) -> int:
    statuses = set(report.statuses())
    if cfg.command == "bound":
        bad = statuses - {"ok"}
    elif cfg.command in ("validate", "moments"):
        bad = statuses & {"failed", "mismatch"}
    else:
        bad = statuses & {"failed"}
    return config.EXIT_FAILED_CHECK if bad else config.EXIT_OK


def run(cfg: RunConfig) -> int:
    """Compute, write the CSV and return the exit status."""
    log_message(f"🚀 {cfg.command}: n={','.join(map(str, cfg.n))} {cfg.qctx.describe()} bn={cfg.bn.spec()}")
    report = build_report(cfg)
    write_report(report, cfg.out)
    if cfg.out:
        log_message(f"💾 Wrote {len(report.rows)} rows to {cfg.out}")

    status = exit_status(cfg, report)
    if status == config.EXIT_OK:
        log_message(f"✅ {cfg.command} finished: all {len(report.rows)} rows passed")
    else:
        log_message(f"❌ {cfg.command} finished with failed checks")
    return status

# ============================================================================
# MAIN EXECUTION
# ============================================================================

def main(argv: Sequence[str] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as e:
        log_failure("parse_config", str(e))
        return config.EXIT_USAGE
    except OSError as e:
        log_failure("read_config_file", f"{type(e).__name__}: {e}")
        return config.EXIT_IO

    try:
        return run(cfg)
    except (UsageError, InvalidArgument) as e:
        log_failure("run", f"{type(e).__name__}: {e}")
        return config.EXIT_USAGE
    except OSError as e:
        log_failure("write_report", f"{type(e).__name__}: {e}")
        return config.EXIT_IO
    except Exception as e:
        log_failure("run", f"{type(e).__name__}: {str(e)}\n{traceback.format_exc()}")
        return config.EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
