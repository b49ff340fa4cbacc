import numpy as np
import pytest

from pmdistill import kernels, linalg
from pmdistill._accel import HAVE_NUMBA, resolve_backend


def rand_density(rng, n=4):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def test_bilateral_cnot_is_permutation():
    u = kernels.BILATERAL_CNOT
    np.testing.assert_array_equal(u @ u, np.eye(16))
    # |A1 B1 A2 B2> = |1 0 0 0> -> |1 0 1 0>
    assert u[0b1010, 0b1000] == 1


def test_branches_sum_to_trace(rng, backend):
    r1, r2 = rand_density(rng), rand_density(rng)
    out = kernels.pair_branches(r1, r2, backend=backend)
    assert out.shape == (2, 2, 4, 4)
    assert sum(np.trace(out[a, b]).real for a in range(2) for b in range(2)) == pytest.approx(1.0, abs=1e-14)


def test_branches_against_direct_projection(rng, backend):
    r1, r2 = rand_density(rng), rand_density(rng)
    joint = kernels.BILATERAL_CNOT @ np.kron(r1, r2) @ kernels.BILATERAL_CNOT.T
    out = kernels.pair_branches(r1, r2, backend=backend)
    for a in range(2):
        for b in range(2):
            proj = np.kron(np.eye(4), linalg.projector(linalg.ket(a, b)))
            ref = linalg.partial_trace(proj @ joint @ proj, linalg.PAIR_MAJOR, ["A2", "B2"])
            np.testing.assert_allclose(out[a, b], ref, atol=1e-14)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_backends_agree(rng):
    for _ in range(10):
        r1, r2 = rand_density(rng), rand_density(rng)
        np.testing.assert_allclose(kernels.pair_branches(r1, r2, backend="numba"),
                                   kernels.pair_branches(r1, r2, backend="numpy"), atol=1e-14)
        ua, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        ub, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        np.testing.assert_allclose(kernels.local_unitary(ua, ub, r1, backend="numba"),
                                   kernels.local_unitary(ua, ub, r1, backend="numpy"), atol=1e-14)


def test_resolve_backend():
    assert resolve_backend("numpy") == "numpy"
    with pytest.raises(ValueError):
        resolve_backend("cuda")


def test_env_flag_selects_numpy():
    import os
    import subprocess
    import sys
    env = dict(os.environ, PMDISTILL_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from pmdistill._accel import default_backend; print(default_backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
