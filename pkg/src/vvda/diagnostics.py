"""Error norms, per-step monitors, rate tables, CSV and plot output.

Error integrals use a degree-8 rule, two above the assembly quadrature,
so measured convergence rates reflect the discretization rather than
the metric.  CSV output carries 17 significant digits so reports
round-trip exactly.
"""

import math

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "CSV_COLUMNS", "ERROR_DEGREE", "RunReport", "RateTable", "Recorder",
    "l2_error", "h1_seminorm_error", "l2_norm", "h1_seminorm",
    "pairwise_rates", "fit_rates", "write_csv", "read_csv", "write_plot",
    "first_crossing_time", "plateau_level",
]

ERROR_DEGREE = 8

CSV_COLUMNS = ["n", "t", "err_v_l2", "err_w_l2", "err_v_h1", "err_w_h1",
               "norm_v_l2", "norm_w_l2", "norm_v_h1", "norm_w_h1", "div_res"]


# -- norms against closed-form truth ----------------------------------------

def l2_error(field, truth, t, degree=ERROR_DEGREE):
    """L2 norm of field - truth(., t) by quadrature.

    ``truth(x, y, t)`` returns one array for scalar spaces or a pair for
    vector spaces.
    """
    space = field.space
    batch = space.batch(degree)
    vals = truth(batch.xq, batch.yq, t)
    if space.components == 1:
        diff = batch.scalar_values(field.coeffs) \
            - np.broadcast_to(vals, batch.xq.shape)
        acc = np.sum(batch.wdet * diff * diff)
    else:
        acc = 0.0
        for c in range(2):
            diff = batch.scalar_values(field.component(c)) \
                - np.broadcast_to(vals[c], batch.xq.shape)
            acc += np.sum(batch.wdet * diff * diff)
    return math.sqrt(max(acc, 0.0))


def h1_seminorm_error(field, grad_truth, t, degree=ERROR_DEGREE):
    """H1 seminorm of field - truth via the truth's gradient closure.

    ``grad_truth(x, y, t)`` returns (gx, gy) for scalars, or the pair of
    component gradients ((u1x, u1y), (u2x, u2y)) for vectors.
    """
    space = field.space
    batch = space.batch(degree)
    grads = grad_truth(batch.xq, batch.yq, t)
    if space.components == 1:
        grads = (grads,)
    acc = 0.0
    for c in range(space.components):
        gh = batch.scalar_gradients(field.component(c))
        for k in range(2):
            diff = gh[:, :, k] - np.broadcast_to(grads[c][k], batch.xq.shape)
            acc += np.sum(batch.wdet * diff * diff)
    return math.sqrt(max(acc, 0.0))


def l2_norm(field, degree=ERROR_DEGREE):
    return l2_error(field, _zero_like(field), 0.0, degree)


def h1_seminorm(field, degree=ERROR_DEGREE):
    return h1_seminorm_error(field, _zero_grad_like(field), 0.0, degree)


def _zero_like(field):
    if field.space.components == 1:
        return lambda x, y, t: np.zeros_like(x)
    return lambda x, y, t: (np.zeros_like(x), np.zeros_like(x))


def _zero_grad_like(field):
    zero2 = lambda x: (np.zeros_like(x), np.zeros_like(x))
    if field.space.components == 1:
        return lambda x, y, t: zero2(x)
    return lambda x, y, t: (zero2(x), zero2(x))


def field_mean(field):
    """Domain mean of each component (monitored, never enforced)."""
    vec = field.space.integral_vector()
    x0, y0, x1, y1 = field.space.mesh.domain
    area = (x1 - x0) * (y1 - y0)
    if field.space.components == 1:
        return float(vec @ field.coeffs) / area
    return np.array([vec[0::2] @ field.component(0),
                     vec[1::2] @ field.component(1)]) / area


# -- per-run recording -------------------------------------------------------

class Recorder:
    """Builds report rows from states.

    ``reference`` is a closed-form case (errors by quadrature), a twin
    trajectory (errors are coefficient-space gaps in the mass/stiffness
    norms), or None (error columns become nan).
    """

    def __init__(self, reference=None):
        self.reference = reference

    def __call__(self, state, stepper, div_res):
        row = {"n": float(state.n), "t": state.t, "div_res": div_res}
        v, w = state.v_now, state.w_now
        row["norm_v_l2"] = _quad_norm(stepper.Mv, v.coeffs)
        row["norm_w_l2"] = _quad_norm(stepper.Mw, w.coeffs)
        row["norm_v_h1"] = _quad_norm(stepper.Kv, v.coeffs)
        row["norm_w_h1"] = _quad_norm(stepper.Kw, w.coeffs)
        ref = self.reference
        if ref is None:
            row.update(err_v_l2=math.nan, err_w_l2=math.nan,
                       err_v_h1=math.nan, err_w_h1=math.nan)
        elif hasattr(ref, "frame_index"):
            k = ref.frame_index(state.t)
            dv = v.coeffs - ref.v_frames[k]
            dw = w.coeffs - ref.w_frames[k]
            row["err_v_l2"] = _quad_norm(stepper.Mv, dv)
            row["err_w_l2"] = _quad_norm(stepper.Mw, dw)
            row["err_v_h1"] = _quad_norm(stepper.Kv, dv)
            row["err_w_h1"] = _quad_norm(stepper.Kw, dw)
        else:
            row["err_v_l2"] = l2_error(v, ref.velocity, state.t)
            row["err_w_l2"] = l2_error(w, ref.vorticity, state.t)
            row["err_v_h1"] = h1_seminorm_error(v, ref.grad_velocity, state.t)
            row["err_w_h1"] = h1_seminorm_error(w, ref.grad_vorticity, state.t)
        return row


def _quad_norm(mat, coeffs):
    return math.sqrt(max(float(coeffs @ (mat @ coeffs)), 0.0))


class RunReport:
    """Columnar per-step time series plus the configuration echo."""

    def __init__(self, rows, config_echo=None, wall_clock=0.0):
        self.config_echo = dict(config_echo or {})
        self.wall_clock = float(wall_clock)
        self.columns = {}
        for name in CSV_COLUMNS:
            self.columns[name] = np.array([row.get(name, math.nan)
                                           for row in rows], dtype=float)

    def __getitem__(self, name):
        return self.columns[name]

    @property
    def num_rows(self):
        return len(self.columns["t"])


def write_csv(report, path):
    """Emit the fixed-schema CSV (17 significant digits)."""
    with open(path, "w") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        cols = [report[name] for name in CSV_COLUMNS]
        for k in range(report.num_rows):
            f.write(",".join("%.17g" % col[k] for col in cols) + "\n")


def read_csv(path):
    """Parse a report CSV back into a RunReport."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        if header != CSV_COLUMNS:
            raise InvalidArgument("unexpected CSV header in %s" % path)
        rows = []
        for line in f:
            if not line.strip():
                continue
            vals = [float(v) for v in line.split(",")]
            rows.append(dict(zip(CSV_COLUMNS, vals)))
    return RunReport(rows)


# -- convergence rates --------------------------------------------------------

def pairwise_rates(errors):
    """log2 ratios of successive errors; nan marks undefined rates."""
    errors = np.asarray(errors, dtype=float)
    rates = [math.nan]
    for prev, cur in zip(errors[:-1], errors[1:]):
        if prev > 0 and cur > 0:
            rates.append(math.log2(prev / cur))
        else:
            rates.append(math.nan)
    return rates


class RateTable:
    """Errors and pairwise rates on a halved-h ladder."""

    def __init__(self, hs, err_v, err_w=None):
        self.hs = list(map(float, hs))
        self.err_v = list(map(float, err_v))
        self.err_w = None if err_w is None else list(map(float, err_w))
        self.rate_v = pairwise_rates(self.err_v)
        self.rate_w = None if err_w is None else pairwise_rates(self.err_w)

    def __str__(self):
        out = ["%-12s %-14s %-8s %-14s %-8s"
               % ("h", "err_v", "rate_v", "err_w", "rate_w")]
        for k, h in enumerate(self.hs):
            ev, rv = self.err_v[k], self.rate_v[k]
            ew = self.err_w[k] if self.err_w else math.nan
            rw = self.rate_w[k] if self.rate_w else math.nan
            out.append("%-12.6g %-14.6g %-8s %-14.6g %-8s"
                       % (h, ev, _fmt_rate(rv), ew, _fmt_rate(rw)))
        return "\n".join(out)

    def write_csv(self, path):
        with open(path, "w") as f:
            f.write("h,err_v,rate_v,err_w,rate_w\n")
            for k, h in enumerate(self.hs):
                ew = self.err_w[k] if self.err_w else math.nan
                rw = self.rate_w[k] if self.rate_w else math.nan
                f.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                        % (h, self.err_v[k], self.rate_v[k], ew, rw))


def _fmt_rate(r):
    return "-" if math.isnan(r) else "%.4f" % r


def fit_rates(hs, err_v, err_w=None):
    """Build a RateTable, checking the ladder halves h exactly."""
    hs = list(map(float, hs))
    if len(hs) < 1 or len(hs) != len(err_v):
        raise InvalidArgument("need one error per mesh size")
    for h0, h1 in zip(hs[:-1], hs[1:]):
        if abs(h0 / h1 - 2.0) > 1e-12:
            raise InvalidArgument("rate fitting expects exactly halved h")
    return RateTable(hs, err_v, err_w)


# -- plots and curve probes ---------------------------------------------------

def write_plot(reports, path, labels=None, column="err_v_l2",
               ylabel=None, title=None):
    """Log-error versus time, one labeled curve per run (SVG/PDF vector)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.fonttype"] = "none"

    if labels is None:
        labels = ["run %d" % k for k in range(len(reports))]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for report, label in zip(reports, labels):
        ax.semilogy(report["t"], report[column], label=label)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel or column)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def first_crossing_time(times, values, level):
    """First recorded time the curve drops to <= level (inf if never)."""
    below = np.asarray(values) <= level
    idx = np.nonzero(below)[0]
    return float(np.asarray(times)[idx[0]]) if len(idx) else math.inf


def plateau_level(times, values, tail_frac=0.1):
    """(median of the curve tail, tail max/min flatness ratio)."""
    values = np.asarray(values, dtype=float)
    k = max(2, int(len(values) * tail_frac))
    tail = values[-k:]
    lo = max(tail.min(), 1e-300)
    return float(np.median(tail)), float(tail.max() / lo)
