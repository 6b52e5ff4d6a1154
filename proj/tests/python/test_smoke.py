import math

import numpy as np
import pytest

import homlab


def test_sample_field_shape_and_range():
    a = homlab.sample_field(8, dim=2, law="log-uniform", lam=0.5, seed=3)
    assert a.shape == (2, 8, 8)
    assert a.min() >= 0.5 and a.max() <= 2.0
    again = homlab.sample_field(8, dim=2, law="log-uniform", lam=0.5, seed=3)
    assert np.array_equal(a, again)
    other = homlab.sample_field(8, dim=2, law="log-uniform", lam=0.5, seed=3, sample=1)
    assert not np.array_equal(a, other)


def test_box_field_has_inactive_edges():
    a = homlab.sample_field(6, dim=2, domain="box")
    assert a.shape == (2, 7, 7)
    # Axis-0 edges leaving the far face do not exist.
    assert np.all(a[0, 6, :] == 0.0)
    assert set(np.unique(a[a > 0])) <= {0.25, 4.0}


def test_two_phase_values():
    a = homlab.sample_field(16, dim=1, alpha=0.5, beta=2.0, prob=0.25, lam=0.5)
    assert set(np.unique(a)) <= {0.5, 2.0}


def test_one_dimensional_corrector_gives_harmonic_mean():
    a = homlab.sample_field(32, dim=1, law="log-uniform", lam=0.3, seed=1)
    out = homlab.correctors(a, lam=0.3, tol=1e-12)
    harmonic = 1.0 / np.mean(1.0 / a)
    assert out["abar"].shape == (1, 1)
    assert out["abar"][0, 0] == pytest.approx(harmonic, rel=1e-10)
    assert abs(out["phi"].mean()) < 1e-12


def test_constant_field_has_zero_corrector():
    a = np.full((2, 8, 8), 1.7)
    out = homlab.correctors(a)
    assert np.allclose(out["phi"], 0.0, atol=1e-12)
    assert np.allclose(out["abar"], 1.7 * np.eye(2))


def test_reference_values():
    value, exact = homlab.reference_abar(dim=2, alpha=1.0, beta=4.0, prob=0.5)
    assert exact and value == pytest.approx(2.0)
    m = math.log(4.0)
    value, exact = homlab.reference_abar(dim=1, law="log-uniform", lam=0.25)
    assert exact and value == pytest.approx(m / math.sinh(m))


def test_run_rve():
    res = homlab.run("rve", {"L": [8, 16], "N": 3, "workers": 1})
    assert res["name"] == "rve"
    assert len(res["rows"]) == 6
    cols = homlab.columns(res)
    assert cols["L"] == [8.0] * 3 + [16.0] * 3
    assert res["summary"]["experiment"] == "rve"
    assert res["passed"]


def test_errors():
    with pytest.raises(ValueError, match="power of two"):
        homlab.run("rve", {"L": 7})
    with pytest.raises(ValueError):
        homlab.sample_field(8, law="uniform")
    assert "expand" in homlab.experiment_names()
