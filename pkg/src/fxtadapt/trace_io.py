"""Trace CSV emission. Column order is fixed:

t, x_1..x_n, u_1..u_m, theta_hat_1..p, eta, h_1..h_q, h_r_1..h_r_q, V,
delta_0..delta_q, qp_status
"""

from __future__ import annotations

import csv
import os
from typing import Dict, List

from .simulate import SimulationTrace


def trace_header(n: int, m: int, p: int, q: int) -> List[str]:
    header = ["t"]
    header += [f"x_{i + 1}" for i in range(n)]
    header += [f"u_{i + 1}" for i in range(m)]
    header += [f"theta_hat_{i + 1}" for i in range(p)]
    header.append("eta")
    header += [f"h_{i + 1}" for i in range(q)]
    header += [f"h_r_{i + 1}" for i in range(q)]
    header.append("V")
    header += [f"delta_{i}" for i in range(q + 1)]
    header.append("qp_status")
    return header


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def trace_rows(trace: SimulationTrace, decimate: int = 1) -> List[List[str]]:
    if decimate < 1:
        raise ValueError("decimate must be >= 1")
    rows = []
    last = len(trace) - 1
    for k in range(len(trace)):
        # always keep the final sample
        if k % decimate and k != last:
            continue
        values = [trace.times[k]]
        values += list(trace.states[k])
        values += list(trace.controls[k])
        values += list(trace.estimates[k])
        values.append(trace.envelope[k])
        values += list(trace.barrier_values[k])
        values += list(trace.margin_values[k])
        values.append(trace.lyapunov_values[k])
        values += list(trace.slacks[k])
        rows.append([_fmt(v) for v in values] + [trace.qp_statuses[k]])
    return rows


def emit_trace(trace: SimulationTrace, path: str, decimate: int = 1) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(trace_header(trace.n, trace.m, trace.p, trace.q))
        writer.writerows(trace_rows(trace, decimate))
    return path


def read_trace(path: str) -> Dict[str, List[str]]:
    """Column-oriented raw text, so a re-emit reproduces the file byte for byte."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        columns: Dict[str, List[str]] = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                columns[name].append(value)
    return columns


def write_columns(columns: Dict[str, List[str]], path: str) -> str:
    header = list(columns)
    length = len(columns[header[0]]) if header else 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for k in range(length):
            writer.writerow([columns[name][k] for name in header])
    return path
