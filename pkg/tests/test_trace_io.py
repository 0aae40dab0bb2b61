import numpy as np

from fxtadapt.estimator import EstimatorView
from fxtadapt.plant import Box
from fxtadapt.simulate import ControlOutput, SimulationTrace
from fxtadapt.trace_io import emit_trace, read_trace, trace_header, write_columns


def _trace(rows=5):
    trace = SimulationTrace(n=2, m=2, p=2, q=2, dt=0.1, barrier_labels=["h1", "h2"])
    box = Box.symmetric(10.0, 2)
    rng = np.random.default_rng(0)
    for k in range(rows):
        view = EstimatorView(
            theta_hat=rng.normal(size=2), eta=1.0 / (k + 3), eta_dot=0.0, Gamma=np.eye(2), theta_box=box
        )
        status = "infeasible" if k == 2 else "optimal"
        out = ControlOutput(
            u=rng.normal(size=2),
            status=status,
            slacks=rng.normal(size=3),
            barrier_values=rng.normal(size=2),
            margin_values=rng.normal(size=2),
            lyapunov_value=float(rng.normal()),
        )
        trace.record(k * 0.1, rng.normal(size=2), out.u, view, out, status)
    return trace


def test_header_column_order():
    assert trace_header(2, 2, 2, 2) == [
        "t", "x_1", "x_2", "u_1", "u_2", "theta_hat_1", "theta_hat_2", "eta",
        "h_1", "h_2", "h_r_1", "h_r_2", "V", "delta_0", "delta_1", "delta_2", "qp_status",
    ]


def test_empty_trace_is_header_only(tmp_path):
    path = tmp_path / "trace.csv"
    emit_trace(SimulationTrace(n=2, m=2, p=2, q=2, dt=1e-3), str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("t,x_1,x_2")


def test_values_survive_text_exactly(tmp_path):
    trace = _trace()
    path = tmp_path / "trace.csv"
    emit_trace(trace, str(path))
    columns = read_trace(str(path))
    assert len(columns["t"]) == 5
    assert [float(v) for v in columns["x_1"]] == [s[0] for s in trace.states]
    assert [float(v) for v in columns["eta"]] == trace.envelope
    assert columns["qp_status"][2] == "infeasible"
    assert columns["delta_0"][2] == "nan"


def test_reemit_is_byte_identical(tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    emit_trace(_trace(), str(first))
    write_columns(read_trace(str(first)), str(second))
    assert first.read_bytes() == second.read_bytes()


def test_decimation_keeps_last_sample(tmp_path):
    path = tmp_path / "trace.csv"
    emit_trace(_trace(rows=7), str(path), decimate=3)
    times = [float(v) for v in read_trace(str(path))["t"]]
    assert times == [0.0, 0.30000000000000004, 0.6000000000000001]


def test_creates_missing_folder(tmp_path):
    path = tmp_path / "nested" / "dir" / "trace.csv"
    emit_trace(_trace(), str(path))
    assert path.exists()
