"""Batch experiment drivers.

    vvda convergence --scheme bdf2 --dt 0.001 --T 1 --mu1 100 --mu2 100 \
                     --levels 4 --out results/conv
    vvda decay       --mu-list 1,10,100,1000 --h 0.03125 --out results/decay
    vvda stability   --scheme be --dt 10 --mu1 100 --mu2 100 --out results/stab
    vvda twin        --mu1 100 --mu2 100 --T 5 --out results/twin

Flags may come from a key=value file via --config (flags override the
file).  Outputs are namespaced under --out with the resolved options
echoed to run.cfg.  VVDA_THREADS caps sweep parallelism (default 1,
fully deterministic).  Exit codes: 0 ok, 2 configuration error,
3 solver failure, 4 blow-up, 5 I/O error.
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import truth
from .diagnostics import Recorder, fit_rates, read_csv, write_csv, write_plot
from .errors import (BlowUpError, InvalidArgument, ObservationGapError,
                     SolverError, StateError, UnsupportedConfiguration,
                     VVDAError)
from .mesh import coarse_partition, generate_structured
from .scheme import NudgeConfig, SchemeConfig, Stepper, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4
EXIT_IO = 5

BLOWUP_THRESHOLD = 1e10


@dataclass
class ExperimentSpec:
    command: str
    scheme: str = "bdf2"
    dt: float = 0.001
    T: float = 1.0
    nu: float = 1.0
    mu1: float = 100.0
    mu2: Optional[float] = None      # None -> match mu1
    levels: int = 4
    h: Optional[float] = None
    bc: str = ""                     # resolved per command when empty
    mu_list: Optional[list] = None
    out: str = "vvda-out"
    record_stride: int = 1
    steps: int = 2000                # stability only
    twin_file: Optional[str] = None

    def __post_init__(self):
        defaults = {"convergence": ("manufactured", 0.25),
                    "decay": ("manufactured", 1.0 / 32.0),
                    "stability": ("periodic", 1.0 / 8.0),
                    "twin": ("periodic", 1.0 / 16.0)}
        if self.command not in defaults:
            raise InvalidArgument("unknown command %r" % (self.command,))
        bc_default, h_default = defaults[self.command]
        if not self.bc:
            self.bc = bc_default
        if self.h is None:
            self.h = h_default
        if self.bc not in ("periodic", "manufactured"):
            raise InvalidArgument("bc must be 'periodic' or 'manufactured'")
        if not (self.dt > 0 and self.T > 0 and self.nu > 0 and self.h > 0):
            raise InvalidArgument("dt, T, nu and h must be positive")
        if self.mu1 < 0 or (self.mu2 is not None and self.mu2 < 0):
            raise InvalidArgument("nudging intensities must be nonnegative")
        if self.levels < 1:
            raise InvalidArgument("levels must be >= 1")
        if self.record_stride < 1:
            raise InvalidArgument("record stride must be >= 1")
        if self.steps < 1:
            raise InvalidArgument("steps must be >= 1")
        if self.mu_list is not None and any(m < 0 for m in self.mu_list):
            raise InvalidArgument("mu-list entries must be nonnegative")

    @property
    def n_subdiv(self):
        # paper-style mesh label: h = 1/n regardless of domain scaling
        return max(1, round(1.0 / self.h))

    def items(self):
        out = []
        for key, val in self.__dict__.items():
            if val is None:
                continue
            if isinstance(val, list):
                val = ",".join("%g" % v for v in val)
            out.append((key, val))
        return out


def _mesh_for(spec, n=None):
    n = n or spec.n_subdiv
    if spec.bc == "periodic":
        return generate_structured(n, periodic=True)
    return generate_structured(n)


def _scheme_config(spec, mu1, mu2, partition=None, observer=None, T=None):
    nudge = NudgeConfig(mu1=mu1, mu2=mu2, partition=partition,
                        observer=observer)
    bc_mode = "periodic" if spec.bc == "periodic" else "dirichlet"
    return SchemeConfig(dt=spec.dt, nu=spec.nu, T=T or spec.T,
                        scheme=spec.scheme, bc_mode=bc_mode, nudge=nudge)


def _write_sidecar(spec, outdir):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "run.cfg"), "w") as f:
        for key, val in spec.items():
            f.write("%s=%s\n" % (key, val))


def _threads():
    try:
        return max(1, int(os.environ.get("VVDA_THREADS", "1")))
    except ValueError:
        return 1


def _map_jobs(jobs, worker):
    threads = _threads()
    if threads == 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs))


# -- convergence ----------------------------------------------------------------

def _resolved_mu2(spec):
    return spec.mu1 if spec.mu2 is None else spec.mu2


def _run_convergence_level(job):
    spec, n = job
    case = truth.experiment1_case(spec.nu)
    mesh = generate_structured(n)
    part = coarse_partition(mesh, "same")
    observer = truth.case_observer(case, part)
    mu1, mu2 = spec.mu1, _resolved_mu2(spec)
    cfg = _scheme_config(spec, mu1, mu2,
                         partition=part if (mu1 > 0 or mu2 > 0) else None,
                         observer=observer)
    stepper = Stepper(mesh, cfg, case)
    _, report = run(stepper, recorder=Recorder(case),
                    record_stride=spec.record_stride)
    path = os.path.join(spec.out, "level_n%d.csv" % n)
    write_csv(report, path)
    return (1.0 / n, report["err_v_l2"][-1], report["err_w_l2"][-1])


def cmd_convergence(spec):
    """h-ladder study at fixed dt; returns the RateTable."""
    _write_sidecar(spec, spec.out)
    ns = [4 * 2 ** k for k in range(spec.levels)]
    results = _map_jobs([(spec, n) for n in ns], _run_convergence_level)
    hs = [r[0] for r in results]
    table = fit_rates(hs, [r[1] for r in results], [r[2] for r in results])
    table.write_csv(os.path.join(spec.out, "rates.csv"))
    with open(os.path.join(spec.out, "rates.txt"), "w") as f:
        f.write(str(table) + "\n")
    print(table)
    return table


# -- decay ----------------------------------------------------------------------

def _run_decay_member(job):
    spec, mu1, mu2 = job
    case = truth.experiment1_case(spec.nu)
    mesh = _mesh_for(spec)
    part = coarse_partition(mesh, "same")
    observer = truth.case_observer(case, part)
    cfg = _scheme_config(spec, mu1, mu2,
                         partition=part if (mu1 > 0 or mu2 > 0) else None,
                         observer=observer)
    stepper = Stepper(mesh, cfg, case)
    _, report = run(stepper, recorder=Recorder(case),
                    record_stride=spec.record_stride)
    path = os.path.join(spec.out, "decay_mu1_%g_mu2_%g.csv" % (mu1, mu2))
    write_csv(report, path)
    return path


def cmd_decay(spec):
    """Error-versus-time runs over a list of nudging intensities."""
    _write_sidecar(spec, spec.out)
    mus = spec.mu_list if spec.mu_list is not None else [spec.mu1]
    pairs = [(m, m if spec.mu2 is None else spec.mu2) for m in mus]
    paths = _map_jobs([(spec, m1, m2) for m1, m2 in pairs], _run_decay_member)
    reports = [read_csv(p) for p in paths]
    labels = ["mu1=%g, mu2=%g" % pair for pair in pairs]
    write_plot(reports, os.path.join(spec.out, "decay_velocity.svg"),
               labels, column="err_v_l2", ylabel="L2 velocity error")
    write_plot(reports, os.path.join(spec.out, "decay_vorticity.svg"),
               labels, column="err_w_l2", ylabel="L2 vorticity error")
    return paths


# -- stability -------------------------------------------------------------------

def cmd_stability(spec):
    """Long fixed-step run recording norms; raises BlowUpError on 1e10."""
    if spec.bc != "periodic":
        raise InvalidArgument("stability runs use the periodic box")
    _write_sidecar(spec, spec.out)
    case = truth.stability_case()
    mesh = _mesh_for(spec)
    part = coarse_partition(mesh, "same")
    observer = truth.case_observer(case, part)
    mu1, mu2 = spec.mu1, _resolved_mu2(spec)
    T = spec.steps * spec.dt
    cfg = _scheme_config(spec, mu1, mu2,
                         partition=part if (mu1 > 0 or mu2 > 0) else None,
                         observer=observer, T=T)
    stepper = Stepper(mesh, cfg, case)
    _, report = run(stepper, recorder=Recorder(),
                    record_stride=spec.record_stride,
                    blowup_threshold=BLOWUP_THRESHOLD)
    write_csv(report, os.path.join(spec.out, "stability.csv"))
    with open(os.path.join(spec.out, "stability_summary.txt"), "w") as f:
        for name in ("norm_v_l2", "norm_w_l2", "norm_v_h1", "norm_w_h1"):
            series = report[name]
            half = np.max(series[:len(series) // 2 + 1])
            full = np.max(series)
            f.write("%s: max=%.6g half_run_max=%.6g ratio=%.6f\n"
                    % (name, full, half, full / max(half, 1e-300)))
    return report


# -- twin ------------------------------------------------------------------------

def cmd_twin(spec):
    """Twin experiment: assimilate observations sampled from a stored run."""
    if spec.bc != "periodic":
        raise InvalidArgument("twin runs use the periodic box")
    _write_sidecar(spec, spec.out)
    case = truth.twin_forcing_case()
    mesh = _mesh_for(spec)
    cfg0 = _scheme_config(spec, 0.0, 0.0)

    if spec.twin_file and os.path.exists(spec.twin_file):
        probe = Stepper(mesh, cfg0, case)
        trajectory = truth.load_twin(spec.twin_file, probe.vel, probe.vort)
    else:
        trajectory = truth.twin_generate(mesh, cfg0, case=case,
                                         initial_velocity=truth.twin_default_ic)
        target = spec.twin_file or os.path.join(spec.out, "twin.bin")
        truth.save_twin(trajectory, target)

    part = coarse_partition(mesh, "same")
    observer = truth.twin_observer(trajectory, part)
    mu1, mu2 = spec.mu1, _resolved_mu2(spec)
    cfg = _scheme_config(spec, mu1, mu2, partition=part, observer=observer)
    stepper = Stepper(mesh, cfg, case)
    _, report = run(stepper, recorder=Recorder(trajectory),
                    record_stride=spec.record_stride)
    write_csv(report, os.path.join(spec.out, "twin_gap.csv"))
    write_plot([report], os.path.join(spec.out, "twin_gap.svg"),
               ["mu1=%g, mu2=%g" % (mu1, mu2)], column="err_v_l2",
               ylabel="L2 state gap")
    gap0, gapT = report["err_v_l2"][0], report["err_v_l2"][-1]
    print("initial gap %.6e  final gap %.6e  ratio %.3e"
          % (gap0, gapT, gapT / max(gap0, 1e-300)))
    return report


# -- argument handling -----------------------------------------------------------

def _build_parser():
    p = argparse.ArgumentParser(prog="vvda", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command",
                   choices=["convergence", "decay", "stability", "twin"])
    p.add_argument("--config", help="key=value defaults file (flags override)")
    p.add_argument("--scheme", choices=["be", "bdf2"])
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--mu1", type=float)
    p.add_argument("--mu2", type=float)
    p.add_argument("--levels", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--bc", choices=["periodic", "manufactured"])
    p.add_argument("--mu-list", dest="mu_list",
                   help="comma separated nudging intensities")
    p.add_argument("--out")
    p.add_argument("--record-stride", dest="record_stride", type=int)
    p.add_argument("--steps", type=int, help="step count for stability runs")
    p.add_argument("--twin-file", dest="twin_file")
    return p


def _load_config_file(path):
    values = {}
    try:
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InvalidArgument("bad config line %r in %s"
                                          % (line, path))
                key, val = line.split("=", 1)
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise InvalidArgument("cannot read config file: %s" % exc) from exc
    return values


def build_spec(argv):
    parser = _build_parser()
    args = parser.parse_args(argv)
    merged = {}
    if args.config:
        merged.update(_load_config_file(args.config))
    for key, val in vars(args).items():
        if key == "config" or val is None:
            continue
        merged[key] = val

    def num(key, cast):
        if key in merged and isinstance(merged[key], str):
            merged[key] = cast(merged[key])

    for key in ("dt", "T", "nu", "mu1", "mu2", "h"):
        num(key, float)
    for key in ("levels", "record_stride", "steps"):
        num(key, int)
    if isinstance(merged.get("mu_list"), str):
        merged["mu_list"] = [float(v) for v in merged["mu_list"].split(",") if v]
    try:
        return ExperimentSpec(**merged)
    except TypeError as exc:
        raise InvalidArgument("bad configuration: %s" % exc) from exc


def main(argv=None):
    try:
        spec = build_spec(argv if argv is not None else sys.argv[1:])
        handler = {"convergence": cmd_convergence, "decay": cmd_decay,
                   "stability": cmd_stability, "twin": cmd_twin}[spec.command]
        handler(spec)
        return EXIT_OK
    except (InvalidArgument, UnsupportedConfiguration, StateError) as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    except BlowUpError as exc:
        print("blow-up detected: %s" % exc, file=sys.stderr)
        return EXIT_BLOWUP
    except (OSError, ObservationGapError) as exc:
        print("I/O error: %s" % exc, file=sys.stderr)
        return EXIT_IO
    except VVDAError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
