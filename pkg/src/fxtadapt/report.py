from __future__ import annotations

from typing import List, Optional

from .schemas import RunSummary, SweepRow


def _num(value: Optional[float], fmt: str = ".3f") -> str:
    return "-" if value is None else format(value, fmt)


def render_run_report(summary: RunSummary) -> str:
    lines: List[str] = []
    lines.append(f"# Run report: {summary.scenario} / {summary.controller}")
    lines.append("")
    lines.append("## Summary")
    lines.append(f"- theta_bar: {summary.theta_bar:g}")
    lines.append(f"- dt: {summary.dt:g} ({summary.steps} samples)")
    lines.append(f"- termination: {summary.termination}")
    lines.append(f"- goal reached: {'yes' if summary.goal_reached else 'no'}")
    lines.append(f"- completion time: {_num(summary.completion_time)} s")
    if summary.decision:
        lines.append(f"- decision: {summary.decision}")
    if summary.passed_gap is not None:
        lines.append(f"- passed through gap: {'yes' if summary.passed_gap else 'no'}")
    lines.append(f"- infeasible QP steps: {summary.infeasible_steps}")
    lines.append("")

    lines.append("## Barrier minima")
    lines.append("| barrier | min h | min h_r |")
    lines.append("|---|---|---|")
    for label, value in summary.min_barrier.items():
        margin = summary.min_barrier_margin.get(label)
        lines.append(f"| {label} | {value:.6g} | {_num(margin, '.6g')} |")
    lines.append("")

    lines.append("## Estimator")
    lines.append(f"- activation: {_num(summary.activation_time, '.4f')} s")
    lines.append(f"- settling after activation: {_num(summary.settling_time, '.4f')} s")
    lines.append(f"- envelope violations: {summary.envelope_violations}")
    lines.append(f"- rate clamp hits: {summary.rate_clamp_count}")

    if summary.phase_entry_times:
        lines.append("")
        lines.append("## Phase timeline")
        for index, t in enumerate(summary.phase_entry_times, start=1):
            lines.append(f"- phase {index}: entered at {t:.3f} s")
    lines.append("")
    return "\n".join(lines)


def render_sweep_report(rows: List[SweepRow]) -> str:
    lines: List[str] = []
    lines.append("# Sweep report")
    lines.append("")
    lines.append("| theta_bar | T proposed | T baseline | decision proposed | decision baseline |")
    lines.append("|---|---|---|---|---|")
    for row in rows:
        lines.append(
            f"| {row.theta_bar:g} | {_num(row.T_proposed, '.2f')} | {_num(row.T_baseline, '.2f')} "
            f"| {row.decision_proposed} | {row.decision_baseline} |"
        )
    failed = [row for row in rows if row.error]
    lines.append("")
    lines.append("## Failed runs")
    if failed:
        for row in failed:
            lines.append(f"- theta_bar={row.theta_bar:g}: {row.error}")
    else:
        lines.append("- None.")
    lines.append("")
    return "\n".join(lines)


def render_comparison(a: RunSummary, b: RunSummary) -> str:
    lines: List[str] = []
    lines.append(f"# Comparison: {a.controller} vs {b.controller}")
    lines.append("")
    lines.append(f"| field | {a.controller} | {b.controller} |")
    lines.append("|---|---|---|")
    for field in ("completion_time", "goal_reached", "decision", "termination", "settling_time",
                  "envelope_violations", "infeasible_steps"):
        lines.append(f"| {field} | {getattr(a, field)} | {getattr(b, field)} |")
    for label in a.min_barrier:
        lines.append(f"| min {label} | {a.min_barrier[label]:.6g} | {b.min_barrier.get(label, float('nan')):.6g} |")
    lines.append("")
    return "\n".join(lines)
