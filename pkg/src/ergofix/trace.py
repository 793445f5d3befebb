"""
Per-tick trace records, CSV round-tripping and summary metrics.

Every column is numeric except ``mode`` (``arm`` or ``base``). The first line
of a trace file is a ``# schema=...`` comment; the header row follows.
"""

import math
from dataclasses import dataclass

import numpy as np

TRACE_SCHEMA = "ergofix-trace/1"
MODES = ("arm", "base")


def trace_columns(n_q):
    cols = ["t"]
    cols += [f"q_{i}" for i in range(n_q)]
    cols += ["p_x", "p_y", "p_z", "Q_w", "Q_x", "Q_y", "Q_z"]
    cols += ["p_g_x", "p_g_y", "p_g_z", "Q_g_w", "Q_g_x", "Q_g_y", "Q_g_z"]
    cols += ["hand_x", "hand_y", "hand_z", "wrist_x", "wrist_y", "wrist_z"]
    cols += [f"v_{i}" for i in range(6)]
    cols += [f"F_h_{i}" for i in range(6)]
    cols += [f"u_c_{i}" for i in range(6)]
    cols += ["a", "a_measured", "a_a", "a_f", "a_r", "a_e", "a_b"]
    cols += ["theta_a", "theta_f", "theta_r", "theta_e", "theta_b", "angles_degenerate", "reach_clamped"]
    cols += ["f", "d_vp", "d_vo", "d_fp", "d_fo", "p_e_norm", "Psi_e", "phi_n"]
    cols += ["V", "V0", "work_in", "bound"]
    cols += ["mode", "mode_pending", "mode_switched"]
    cols += ["v_xy_x", "v_xy_y", "d", "repulsion_blocked", "x_e_norm", "ns_twist_norm", "J_norm"]
    return cols


@dataclass
class TraceLog:
    """Column-major trace; ``data[:, j]`` is column ``columns[j]``."""

    columns: list
    data: np.ndarray
    error: str = ""

    def __post_init__(self):
        self._index = {c: j for j, c in enumerate(self.columns)}

    def __len__(self):
        return len(self.data)

    def __getitem__(self, name):
        try:
            return self.data[:, self._index[name]]
        except KeyError:
            raise KeyError(f"unknown trace column {name!r}") from None

    def has(self, name):
        return name in self._index

    def block(self, prefix, n):
        return np.column_stack([self[f"{prefix}_{i}"] for i in range(n)])


class TraceBuilder:
    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def append(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"trace row has {len(row)} values, expected {len(self.columns)}")
        self.rows.append(row)

    def build(self, error=""):
        data = np.array(self.rows, dtype=float) if self.rows else np.zeros((0, len(self.columns)))
        return TraceLog(self.columns, data, error)


def _fmt(x):
    # repr round-trips exactly and is platform independent
    return repr(float(x))


def write_trace(trace, path):
    mode_j = trace.columns.index("mode")
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# schema={TRACE_SCHEMA}\n")
        fh.write(",".join(trace.columns) + "\n")
        for row in trace.data:
            vals = [_fmt(x) for x in row]
            vals[mode_j] = MODES[int(row[mode_j])]
            fh.write(",".join(vals) + "\n")


def read_trace(path):
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema={TRACE_SCHEMA}":
            raise ValueError(f"{path}: not a trace file (expected '# schema={TRACE_SCHEMA}')")
        columns = fh.readline().strip().split(",")
        if "mode" not in columns:
            raise ValueError(f"{path}: header lacks a 'mode' column")
        mode_j = columns.index("mode")
        rows = []
        for lineno, line in enumerate(fh, start=3):
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(columns):
                raise ValueError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(parts)}")
            try:
                parts[mode_j] = MODES.index(parts[mode_j])
                rows.append([float(x) for x in parts])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed value") from None
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(columns)))
    return TraceLog(columns, data)


# ---------------------------------------------------------------------------
# derived quantities and plot data
# ---------------------------------------------------------------------------

def _norm_of(prefix, n):
    return lambda tr: np.linalg.norm(tr.block(prefix, n), axis=1)


DERIVED = {
    "V_minus_bound": lambda tr: tr["V"] - tr["bound"],
    "passivity_residual": lambda tr: tr["V"] - tr["V0"] - tr["work_in"],
    "F_h_norm": lambda tr: np.linalg.norm(tr.block("F_h", 6)[:, :3], axis=1),
    "tau_h_norm": lambda tr: np.linalg.norm(tr.block("F_h", 6)[:, 3:], axis=1),
    "u_c_force_norm": lambda tr: np.linalg.norm(tr.block("u_c", 6)[:, :3], axis=1),
    "u_c_torque_norm": lambda tr: np.linalg.norm(tr.block("u_c", 6)[:, 3:], axis=1),
    "v_norm": _norm_of("v", 6),
    "v_xy_norm": lambda tr: np.hypot(tr["v_xy_x"], tr["v_xy_y"]),
}


def quantity(trace, name):
    if name in DERIVED:
        return DERIVED[name](trace)
    if trace.has(name):
        return trace[name]
    known = sorted(set(trace.columns) - {"t"} | set(DERIVED))
    raise KeyError(f"unknown quantity {name!r}; choose one of: {', '.join(known)}")


def emit_plot_data(trace, name, path):
    values = quantity(trace, name)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"t,{name}\n")
        for t, v in zip(trace["t"], values):
            fh.write(f"{_fmt(t)},{_fmt(v)}\n")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass
class MetricsSummary:
    a_bar: float
    zeta_ne: float   # % of ticks with a = 0
    beta: int        # number of a > 0 -> a = 0 transitions
    zeta_d: float    # % of ticks with leg clearance below d_0

    def as_dict(self):
        return {"a_bar": self.a_bar, "zeta_ne": self.zeta_ne, "beta": self.beta, "zeta_d": self.zeta_d}


def metrics_from_arrays(a, d, d_0):
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    if a.size == 0:
        raise ValueError("cannot compute metrics of an empty trace")
    zero = a == 0.0
    beta = int(np.count_nonzero(zero[1:] & ~zero[:-1]))
    return MetricsSummary(
        a_bar=float(a.mean()),
        zeta_ne=100.0 * float(zero.mean()),
        beta=beta,
        zeta_d=100.0 * float(np.mean(d < d_0)),
    )


def compute_metrics(trace, d_0):
    """Metrics from the measured posture score, so baseline runs are scored too."""
    col = "a_measured" if trace.has("a_measured") else "a"
    d = trace["d"] if trace.has("d") else np.full(len(trace), math.inf)
    return metrics_from_arrays(trace[col], d, d_0)
