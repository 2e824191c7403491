import os
import subprocess
import sys

import numpy as np
import pytest

from aeroarm import kernels
from aeroarm.spatial import rpy_to_matrix

needs_numba = pytest.mark.skipif(not kernels.NUMBA_ENABLED, reason="numba backend disabled")


def rk4_args():
    J = np.diag([0.05, 0.05, 0.09])
    M = np.diag([3.953] * 3 + [0.05, 0.05, 0.09])
    return (0, np.array([0.1, -0.2, 1.0]), rpy_to_matrix(0.1, -0.2, 0.3),
            np.array([0.3, 0.1, -0.2]), np.array([0.5, -0.4, 0.9]), 1e-3, 3.953, J,
            np.linalg.inv(J), 9.81, np.linalg.inv(M), np.diag([8.0, 8, 8, 1, 1, 1]),
            np.diag([16.0, 16, 16, 2, 2, 2]), np.zeros(3), np.eye(3), np.zeros(3),
            np.zeros(3), np.zeros(6), np.zeros(6), np.array([1.0, 0, 0, 0, 0.1, 0]))


@needs_numba
def test_compiled_rk4_matches_python_source():
    args = rk4_args()
    fast = kernels.closed_loop_rk4(*args)
    slow = kernels.closed_loop_rk4.py_func(*args)
    for a, b in zip(fast, slow):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


@needs_numba
def test_compiled_hinge_matches_python_source():
    args = (0.6, -2.0, False, 0.0, 0.05, 0.2, 3e-4, 0.02, 0.03, 1e-3, 1e-4)
    assert kernels.hinge_step(*args) == pytest.approx(kernels.hinge_step.py_func(*args),
                                                      abs=1e-15)


def test_backend_flag_selects_numpy():
    env = dict(os.environ, AEROARM_NUMBA="0")
    r = subprocess.run([sys.executable, "-c",
                        "from aeroarm import kernels; print(kernels.backend())"],
                       env=env, capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "numpy"
