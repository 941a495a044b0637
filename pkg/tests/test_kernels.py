import os
import subprocess
import sys

import numpy as np
import pytest

from ulampoly import _kernels_py as py
from ulampoly.homotopy import gamma_constant, start_constants, start_system
from ulampoly.ulam_map import ResidualSystem, jacobian, residual

cy = pytest.importorskip("ulampoly._kernels")


@pytest.mark.parametrize("mod", [py, cy], ids=["python", "cython"])
@pytest.mark.parametrize("kind,system", [(py.FULL, ResidualSystem.FULL),
                                         (py.TILDE, ResidualSystem.TILDE)])
def test_target_system_matches_reference(mod, kind, system, rng):
    for n in (2, 3, 5):
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        f, jac = mod.target_system(x, kind)
        assert np.allclose(f, residual(x, system), atol=1e-12)
        assert np.allclose(jac, jacobian(x, system), atol=1e-12)


@pytest.mark.parametrize("system", [ResidualSystem.FULL, ResidualSystem.TILDE])
def test_track_path_parity(system):
    n = 4
    degrees = np.asarray(system.degrees(n), dtype=np.int_)
    consts = start_constants(n, 2)
    gamma = gamma_constant(2)
    kind = py.FULL if system is ResidualSystem.FULL else py.TILDE
    for s in start_system(degrees, 2):
        a = py.track_path(s, kind, degrees, consts, gamma)
        b = cy.track_path(s, kind, degrees, consts, gamma)
        assert a[1] == b[1] and a[2] == b[2]
        assert np.max(np.abs(np.asarray(a[0]) - np.asarray(b[0]))) <= 1e-9


def test_rk4_flow_parity():
    g = np.array([1.0, -2.0], dtype=complex)
    starts = g + np.array([[0.05, -0.03j], [0.1j, 0.02], [2.9, 0.0]])
    a = py.rk4_flow(starts, g, 1e-2, 300, 10, 1e-10)
    b = cy.rk4_flow(starts, g, 1e-2, 300, 10, 1e-10)
    assert np.array_equal(a[1], b[1])
    valid = int(min(a[1]))
    assert np.allclose(a[0][:, :valid], b[0][:, :valid], atol=1e-12)


def test_rk4_flow_reports_collision():
    g = np.array([1.0, -2.0], dtype=complex)
    # starting on a collision: no valid records beyond the first
    for mod in (py, cy):
        _, n_valid = mod.rk4_flow(np.array([[0.5, 0.5]], dtype=complex), g, 1e-2, 10, 1, 1e-10)
        assert n_valid[0] <= 1


def test_backend_env_switch():
    env = dict(os.environ, ULAMPOLY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ulampoly; print(ulampoly.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
