import subprocess
import sys

import numpy as np
import pytest

from perfopt import kernels

from _oracles import ackley_scalar, rastrigin_scalar


@pytest.fixture
def restore_backend():
    before = kernels.current_backend()
    yield
    kernels.set_backend(before)


def test_ackley_matches_scalar_formula():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-5.12, 5.12, size=(200, 2))
    want = np.array([ackley_scalar(x, y) for x, y in pts])
    assert np.allclose(kernels.ackley_values(pts), want, rtol=1e-12, atol=1e-12)


def test_rastrigin_matches_scalar_formula():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-5.12, 5.12, size=(200, 2))
    want = np.array([rastrigin_scalar(x, y) for x, y in pts])
    assert np.allclose(kernels.rastrigin_values(pts), want, rtol=1e-12, atol=1e-12)


def test_known_values():
    assert kernels.ackley_values(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.0, abs=1e-12)
    assert kernels.rastrigin_values(np.array([[0.0, 0.0]]))[0] == 0.0
    assert kernels.rastrigin_values(np.array([[1.0, 1.0]]))[0] == pytest.approx(2.0)
    assert kernels.rastrigin_values(np.array([[0.5, 0.0]]))[0] == pytest.approx(20.25)


def test_zoom_bounds_matches_direct_expression():
    rng = np.random.default_rng(2)
    rows = rng.normal(size=(7, 40))
    w = np.abs(rng.normal(size=(7, 40)))
    slack = np.abs(rng.normal(size=7))
    lb, ub = kernels.zoom_bounds(rows, w, slack)
    assert np.allclose(lb, (rows - slack[:, None] - w).max(axis=0))
    assert np.allclose(ub, (rows + slack[:, None] + w).min(axis=0))


def test_backends_agree(restore_backend):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-5.12, 5.12, size=(500, 2))
    rows = rng.normal(size=(9, 64))
    w = np.abs(rng.normal(size=(9, 64)))
    slack = np.abs(rng.normal(size=9))
    results = {}
    for backend in ("numpy", "numba"):
        try:
            kernels.set_backend(backend)
        except Exception:
            pytest.skip("numba backend unavailable")
        results[backend] = (
            kernels.ackley_values(pts),
            kernels.rastrigin_values(pts),
            *kernels.zoom_bounds(rows, w, slack),
        )
    for a, b in zip(results["numpy"], results["numba"]):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_backend_selection(restore_backend):
    assert kernels.current_backend() in ("numpy", "numba")
    assert kernels.set_backend("numpy") == "numpy"
    assert kernels.current_backend() == "numpy"
    with pytest.raises(ValueError):
        kernels.set_backend("gpu")


def test_env_var_forces_numpy_backend():
    code = "from perfopt import kernels; print(kernels.current_backend())"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "PERFOPT_BACKEND": "numpy"},
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "numpy"


def test_one_dimensional_input_is_promoted():
    v = kernels.ackley_values(np.array([1.0, 2.0]))
    assert v.shape == (1,)
    assert v[0] == pytest.approx(ackley_scalar(1.0, 2.0))
