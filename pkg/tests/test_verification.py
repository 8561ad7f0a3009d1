import math

import numpy as np
import pytest

from cslap.symbols import harmonic, kerr, WickSymbol
from cslap.verification import (
    central_offsets,
    fd_weights,
    four_track_defect,
    frame_conservation_drift,
    hbar_convergence,
    invariant_suite,
    mixed_real_partial,
    pde_residual,
    residual_convergence,
    wirtinger_derivative,
)


def test_fd_weights_central_first_derivative():
    w = fd_weights(1, np.array([-1.0, 0.0, 1.0]))
    assert np.allclose(w, [-0.5, 0.0, 0.5])


def test_fd_weights_central_second_derivative():
    w = fd_weights(2, np.array([-1.0, 0.0, 1.0]))
    assert np.allclose(w, [1.0, -2.0, 1.0])


def test_fd_weights_reproduce_exp_derivatives():
    for d in range(1, 5):
        off = central_offsets(d)
        h = 0.05
        w = fd_weights(d, off) / h ** d
        val = np.sum(w * np.exp(off * h))
        assert val == pytest.approx(1.0, abs=1e-7)


def test_fd_weights_requires_enough_points():
    with pytest.raises(ValueError):
        fd_weights(3, np.array([-1.0, 0.0, 1.0]))


def test_central_offsets_symmetric():
    for d in range(1, 5):
        off = central_offsets(d)
        assert np.allclose(off, -off[::-1])
        assert len(off) > d


def test_mixed_real_partial_polynomial():
    # f(x, y) = x^2 y^3, d3f/dx2 dy = 6 y^2 at (1.5, 0.7)
    def f(v):
        return v[0] ** 2 * v[1] ** 3

    base = np.array([1.5, 0.7])
    val = mixed_real_partial(f, base, np.array([2, 1]), 0.05)
    assert val == pytest.approx(6 * 0.7 ** 2, abs=1e-8)


def test_wirtinger_first_derivatives():
    # f = alpha^2 conj(alpha): df/dalpha = 2 alpha conj(alpha), df/dconj = alpha^2
    a = np.array([0.8 + 0.3j])

    def f(z):
        return z[0] ** 2 * np.conj(z[0])

    d_plain = wirtinger_derivative(f, a, (1,), 0.02, "plain")
    d_star = wirtinger_derivative(f, a, (1,), 0.02, "star")
    assert d_plain == pytest.approx(2 * a[0] * np.conj(a[0]), abs=1e-9)
    assert d_star == pytest.approx(a[0] ** 2, abs=1e-9)


def test_wirtinger_second_derivative():
    a = np.array([0.5 - 0.4j])

    def f(z):
        return z[0] ** 3

    d2 = wirtinger_derivative(f, a, (2,), 0.02, "plain")
    assert d2 == pytest.approx(6 * a[0], abs=1e-8)
    assert wirtinger_derivative(f, a, (2,), 0.02, "star") == pytest.approx(0, abs=1e-8)


def test_pde_residual_zero_for_constant():
    res = pde_residual(lambda a, t: 1.0 + 0j, harmonic(1.0), 0.1,
                       [0.5], 0.3, 0.05, 0.05)
    assert abs(res) < 1e-10


def test_pde_residual_harmonic_exact_solution():
    # exact projector expectation for the number Hamiltonian:
    # f(alpha, t) = exp(-|alpha e^{-i w t} - a0|^2 / hbar)
    w, hb, a0 = 1.0, 0.1, 0.8

    def sampler(alpha, t):
        return math.exp(-abs(alpha[0] * np.exp(-1j * w * t) - a0) ** 2 / hb)

    report = residual_convergence(
        lambda h: pde_residual(sampler, harmonic(w), hb, [0.9 + 0.1j], 0.4, h, h),
        [0.08, 0.04, 0.02])
    assert report.observed_order >= 1.8
    assert report.residuals[-1] < report.residuals[0]


def test_residual_convergence_fits_order():
    report = residual_convergence(lambda h: 3.0 * h ** 2, [0.1, 0.05, 0.025])
    assert report.observed_order == pytest.approx(2.0, abs=1e-10)
    report2 = residual_convergence(lambda h: h, [0.1, 0.05])
    assert report2.observed_order is None


def test_hbar_convergence_harmonic_exact():
    report = hbar_convergence(harmonic(1.0), 0, 0, [0.8], [0.85 + 0.05j], 0.5,
                              [0.2, 0.1, 0.05])
    assert report.exact is True
    assert report.slope is None
    assert max(report.residuals) < 1e-8


def test_hbar_convergence_needs_three_points():
    with pytest.raises(ValueError):
        hbar_convergence(harmonic(1.0), 0, 0, [0.8], [0.85], 0.5, [0.2, 0.1])


def test_four_track_defect_small():
    assert four_track_defect(kerr(1.0, 0.5), [1.0], [1.08 + 0.05j], 1.0) < 1e-9


def test_frame_conservation_drift_small():
    assert frame_conservation_drift(kerr(1.0, 0.5), [1.0], 1.0) < 1e-9


def test_invariant_suite_default_passes():
    report = invariant_suite()
    assert report["passed"] is True
    names = {c["check_name"] for c in report["checks"]}
    assert {"symbol_hermitian", "energy_drift", "frame_conservation",
            "caustic_floor", "quadratic_exactness_spot"} <= names
    for c in report["checks"]:
        assert c["pass"], c


def test_invariant_suite_non_hermitian_guard():
    bad = WickSymbol(1, {((0,), (1,)): 1.0})
    report = invariant_suite({"symbol": bad})
    assert report["passed"] is False
    assert "skipped" in report
    assert len(report["checks"]) == 1


def test_invariant_suite_loosened_tolerance_still_reports():
    report = invariant_suite({"drift_tol": 1e-8})
    assert report["passed"] is True
    drift = [c for c in report["checks"] if c["check_name"] == "energy_drift"][0]
    assert drift["tolerance"] == pytest.approx(1e-8)
