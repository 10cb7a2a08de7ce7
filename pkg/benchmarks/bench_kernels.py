"""Benchmark the compiled element kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [n]

Times the two per-step hot operations (weighted mass and directional
convection local matrices) plus the CSR scatter, on a structured mesh
with n subdivisions per side (default 64), and one full nudged BDF2
step per backend for context.
"""

import sys
import timeit

import numpy as np

from vvda import kernels
from vvda.assembly import ASSEMBLY_DEGREE
from vvda.femspace import build_space
from vvda.mesh import generate_structured


def time_call(fn, repeat=20):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    return 1e3 * best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 64
    mesh = generate_structured(n)
    space = build_space(mesh, 2, 1)
    batch = space.batch(ASSEMBLY_DEGREE)
    rng = np.random.default_rng(0)
    nt, nq = batch.wdet.shape
    wq = np.ascontiguousarray(batch.wdet * rng.standard_normal((nt, nq)))
    vx = np.ascontiguousarray(rng.standard_normal((nt, nq)))
    vy = np.ascontiguousarray(rng.standard_normal((nt, nq)))
    gphys = batch.gphys

    from vvda.assembly import _scalar_pattern
    pattern = _scalar_pattern(space)
    local = kernels.weighted_mass_local(wq, batch.phi)
    flat = np.ascontiguousarray(local).ravel()

    backends = kernels.get_backends()
    print("mesh n=%d: %d triangles, %d scalar dofs, %d quadrature points"
          % (n, mesh.num_triangles, space.scalar_dof_count, nq))
    print("selected backend: %s" % kernels.backend_name)
    header = "%-22s" % "kernel"
    for name in backends:
        header += "%16s" % (name + " [ms]")
    print(header)

    rows = [
        ("weighted_mass_local",
         lambda mod: mod.weighted_mass_local(wq, batch.phi)),
        ("convection_local",
         lambda mod: mod.convection_local(batch.wdet, vx, vy, batch.phi,
                                          gphys)),
        ("scatter_add",
         lambda mod: mod.scatter_add(np.zeros(pattern.nnz), pattern.slot,
                                     flat)),
    ]
    for label, runner in rows:
        line = "%-22s" % label
        for name, mod in backends.items():
            line += "%16.3f" % time_call(lambda: runner(mod))
        print(line)

    print()
    print("one nudged BDF2 step (saddle + transport solves) per backend:")
    sys.stdout.flush()
    import os
    import subprocess
    for name in backends:
        code = (
            "import time, numpy as np\n"
            "from vvda import *\n"
            "from vvda.scheme import Stepper\n"
            "case = experiment1_case(1.0)\n"
            "mesh = generate_structured(%d)\n"
            "part = coarse_partition(mesh, 'same')\n"
            "nc = NudgeConfig(mu1=100.0, mu2=100.0, partition=part,\n"
            "                 observer=case_observer(case, part))\n"
            "cfg = SchemeConfig(dt=0.001, nu=1.0, T=1.0, scheme='bdf2',\n"
            "                   bc_mode='dirichlet', nudge=nc)\n"
            "st = Stepper(mesh, cfg, case)\n"
            "s = st.initial_state()\n"
            "for _ in range(3): s = st.step(s)\n"
            "t0 = time.perf_counter()\n"
            "for _ in range(10): s = st.step(s)\n"
            "print('  %%-10s %%7.1f ms/step' %% ('%s', 100*(time.perf_counter()-t0)))\n"
            % (min(n, 32), name))
        env = dict(os.environ, VVDA_KERNELS=name)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


if __name__ == "__main__":
    main()
