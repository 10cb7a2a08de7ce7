import numpy as np
import pytest

from vvda import kernels
from vvda.assembly import ASSEMBLY_DEGREE
from vvda.femspace import build_space
from vvda.mesh import generate_structured


@pytest.fixture(scope="module")
def batch_data(request):
    mesh = generate_structured(6)
    space = build_space(mesh, 2, 1)
    batch = space.batch(ASSEMBLY_DEGREE)
    rng = np.random.default_rng(7)
    nt, nq = batch.wdet.shape
    wq = np.ascontiguousarray(batch.wdet * rng.standard_normal((nt, nq)))
    vx = np.ascontiguousarray(rng.standard_normal((nt, nq)))
    vy = np.ascontiguousarray(rng.standard_normal((nt, nq)))
    return batch, wq, vx, vy


def test_backend_selected():
    assert kernels.backend_name in ("python", "compiled")
    assert "python" in kernels.get_backends()


def test_backends_agree_weighted_mass(batch_data):
    backends = kernels.get_backends()
    if "compiled" not in backends:
        pytest.skip("compiled extension not built")
    batch, wq, _, _ = batch_data
    a = backends["python"].weighted_mass_local(wq, batch.phi)
    b = backends["compiled"].weighted_mass_local(wq, batch.phi)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_backends_agree_convection(batch_data):
    backends = kernels.get_backends()
    if "compiled" not in backends:
        pytest.skip("compiled extension not built")
    batch, _, vx, vy = batch_data
    gphys = batch.gphys
    a = backends["python"].convection_local(batch.wdet, vx, vy, batch.phi, gphys)
    b = backends["compiled"].convection_local(batch.wdet, vx, vy, batch.phi, gphys)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_backends_agree_scatter(rng):
    backends = kernels.get_backends()
    if "compiled" not in backends:
        pytest.skip("compiled extension not built")
    idx = rng.integers(0, 40, size=500)
    vals = rng.standard_normal(500)
    a = np.zeros(40)
    b = np.zeros(40)
    backends["python"].scatter_add(a, idx.astype(np.int64), vals)
    backends["compiled"].scatter_add(b, idx.astype(np.int64), vals)
    assert np.allclose(a, b, rtol=0, atol=1e-15)


def test_python_backend_forced_by_env(tmp_path):
    import subprocess
    import sys
    code = ("import vvda.kernels as k; print(k.backend_name)")
    out = subprocess.run([sys.executable, "-c", code],
                         env={"VVDA_KERNELS": "python", "PATH": "/usr/bin:/bin"},
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip() == "python"
