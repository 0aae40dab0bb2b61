from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Tuple

from .config import output_root, resolve_config
from .errors import EXIT_ABORT, EXIT_OK, EXIT_SAFETY
from .gap import build_gap
from .metrics import safety_violated, summarize
from .overtake import build_overtake
from .report import render_comparison, render_run_report, render_sweep_report
from .scenario import Scenario
from .schemas import ControllerKind, ExperimentConfig, RunSummary, SweepRow
from .trace_io import emit_trace

logger = logging.getLogger(__name__)

BUILDERS = {"gap": build_gap, "overtake": build_overtake}

SWEEP_COLUMNS = ["theta_bar", "T_proposed", "T_baseline", "decision_proposed", "decision_baseline"]


def _log(message: str, hook: Callable[[str], None] | None) -> None:
    logger.info(message)
    if hook:
        hook(message)


def build_scenario(
    config: ExperimentConfig,
    controller_kind: Optional[ControllerKind] = None,
    theta_bar: Optional[float] = None,
) -> Scenario:
    return BUILDERS[config.experiment.scenario](config, controller_kind, theta_bar)


def default_out_dir(config: ExperimentConfig, label: str) -> str:
    if config.experiment.out_dir:
        return config.experiment.out_dir
    return os.path.join(output_root(), f"{config.experiment.scenario}-{label}")


def exit_code(summary: RunSummary) -> int:
    if summary.termination != "completed":
        return EXIT_ABORT
    if safety_violated(summary):
        return EXIT_SAFETY
    return EXIT_OK


def _write_json(path: str, payload: Any) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)


def _effective_config(config: ExperimentConfig, scenario: Scenario) -> Dict[str, Any]:
    resolved = config.model_dump(mode="json")
    resolved["experiment"].update(
        {
            "controller": scenario.kind,
            "theta_bar": scenario.theta_bar,
            "t_final": scenario.t_final,
        }
    )
    return resolved


def run(
    config: ExperimentConfig,
    out_dir: Optional[str] = None,
    progress_hook: Callable[[str], None] | None = None,
    controller_kind: Optional[ControllerKind] = None,
    theta_bar: Optional[float] = None,
) -> Tuple[RunSummary, int]:
    scenario = build_scenario(config, controller_kind, theta_bar)
    out_dir = out_dir or default_out_dir(config, scenario.kind)
    _log(
        f"[run] {scenario.scenario} / {scenario.kind}, theta_bar={scenario.theta_bar:g}, "
        f"dt={scenario.dt:g}, t_final={scenario.t_final:g}",
        progress_hook,
    )
    trace = scenario.run()
    summary = summarize(scenario, trace)
    _log(
        f"[run] {summary.termination} after {summary.steps} samples, "
        f"completion={summary.completion_time}",
        progress_hook,
    )

    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    config_path = os.path.join(out_dir, "resolved_config.json")
    report_path = os.path.join(out_dir, "report.md")

    emit_trace(trace, trace_path, decimate=config.experiment.decimate)
    _write_json(summary_path, summary.model_dump(mode="json"))
    _write_json(config_path, _effective_config(config, scenario))
    with open(report_path, "w", encoding="utf-8") as f:
        f.write(render_run_report(summary))

    code = exit_code(summary)
    _log(f"[done] wrote {trace_path} and {summary_path} (exit {code})", progress_hook)
    return summary, code


def _sweep_point(config_json: Dict[str, Any], kind: str, theta_bar: float, out_dir: str) -> Dict[str, Any]:
    """Worker entry point; receives plain data so it pickles across processes."""
    config = resolve_config(config_json)
    summary, _ = run(config, out_dir=out_dir, controller_kind=kind, theta_bar=theta_bar)
    return summary.model_dump(mode="json")


def _sweep_dir(root: str, kind: str, theta_bar: float) -> str:
    return os.path.join(root, f"theta_{theta_bar:g}", kind)


def sweep(
    config: ExperimentConfig,
    theta_bars: Optional[List[float]] = None,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
    progress_hook: Callable[[str], None] | None = None,
) -> Tuple[List[SweepRow], int]:
    if theta_bars:
        bars = [float(bar) for bar in theta_bars]
    elif config.experiment.scenario == "overtake":
        bars = list(config.overtake.theta_bars)
    else:
        bars = [config.theta_bar()]
    out_dir = out_dir or default_out_dir(config, "sweep")
    workers = workers or config.experiment.workers
    os.makedirs(out_dir, exist_ok=True)
    config_json = config.model_dump(mode="json")
    # the overtake gain is sized on the widest box of the sweep
    config_json["overtake"]["theta_bars"] = bars
    kinds = ("proposed", "robust-baseline")
    jobs = [(kind, bar) for bar in bars for kind in kinds]
    _log(f"[sweep] {len(jobs)} runs over theta_bar={bars} with {workers} worker(s)", progress_hook)

    results: Dict[Tuple[str, float], Any] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                job: pool.submit(_sweep_point, config_json, job[0], job[1], _sweep_dir(out_dir, *job))
                for job in jobs
            }
            for job, future in futures.items():
                try:
                    results[job] = future.result()
                except Exception as exc:
                    results[job] = exc
    else:
        for job in jobs:
            try:
                results[job] = _sweep_point(config_json, job[0], job[1], _sweep_dir(out_dir, *job))
            except Exception as exc:
                results[job] = exc

    rows: List[SweepRow] = []
    code = EXIT_OK
    for bar in bars:
        row = SweepRow(theta_bar=bar)
        errors = []
        for kind, suffix in zip(kinds, ("proposed", "baseline")):
            result = results[(kind, bar)]
            if isinstance(result, Exception):
                logger.error("sweep run %s theta_bar=%g failed: %r", kind, bar, result)
                errors.append(f"{kind}: {type(result).__name__}: {result}")
                code = max(code, EXIT_ABORT)
                continue
            summary = RunSummary.model_validate(result)
            setattr(row, f"T_{suffix}", summary.completion_time)
            setattr(row, f"decision_{suffix}", summary.decision or "no-go")
            code = max(code, exit_code(summary))
        row.error = "; ".join(errors) or None
        rows.append(row)
        _log(
            f"[sweep] theta_bar={bar:g}: T_proposed={row.T_proposed} T_baseline={row.T_baseline}",
            progress_hook,
        )

    write_sweep_csv(rows, os.path.join(out_dir, "sweep.csv"))
    _write_json(os.path.join(out_dir, "sweep.json"), [row.model_dump(mode="json") for row in rows])
    with open(os.path.join(out_dir, "report.md"), "w", encoding="utf-8") as f:
        f.write(render_sweep_report(rows))
    _log(f"[done] wrote {os.path.join(out_dir, 'sweep.csv')}", progress_hook)
    return rows, code


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_sweep_csv(rows: List[SweepRow], path: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_cell(getattr(row, name)) for name in SWEEP_COLUMNS])
    return path


def load_summary(path: str) -> RunSummary:
    with open(path, "r", encoding="utf-8") as f:
        return RunSummary.model_validate(json.load(f))


COMPARE_FIELDS = [
    "scenario",
    "controller",
    "theta_bar",
    "completion_time",
    "goal_reached",
    "decision",
    "termination",
    "activation_time",
    "settling_time",
    "envelope_violations",
    "infeasible_steps",
]


def compare(a: RunSummary, b: RunSummary, out_path: Optional[str] = None) -> List[List[str]]:
    """Join two summaries field by field; barrier minima get one row per label."""
    table = [["field", "a", "b"]]
    for name in COMPARE_FIELDS:
        table.append([name, _cell(getattr(a, name)), _cell(getattr(b, name))])
    for label in sorted(set(a.min_barrier) | set(b.min_barrier)):
        table.append([f"min_{label}", _cell(a.min_barrier.get(label)), _cell(b.min_barrier.get(label))])
    if out_path:
        folder = os.path.dirname(out_path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(out_path, "w", encoding="utf-8", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(table)
        with open(os.path.splitext(out_path)[0] + ".md", "w", encoding="utf-8") as f:
            f.write(render_comparison(a, b))
    return table
