import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cslap.symbols import WickSymbol, effective_hamiltonian, harmonic, kerr, beam_splitter
from cslap.characteristics import (
    DerivativeTable,
    IntegrationError,
    VariationalFrame,
    caustic_indicator,
    char_rhs,
    classical_rhs,
    integrate,
    phase_hessian_from_frame,
    transport_rate,
    variational_rhs,
)

TOL = 1e-11


def test_classical_rhs_harmonic():
    out = classical_rhs(harmonic(0.7), [2.0 - 1.0j])
    assert out[0] == pytest.approx(1j * 0.7 * (2.0 - 1.0j))


def test_char_rhs_harmonic_decoupled():
    # dalpha/dt = i w alpha, dp/dt = -i w p for the quadratic symbol
    w = 1.3
    a, p = 0.5 + 0.2j, -0.1 + 0.4j
    da, dp = char_rhs(harmonic(w), [a], [p])
    assert da[0] == pytest.approx(1j * w * a)
    assert dp[0] == pytest.approx(-1j * w * p)


def test_char_rhs_finite_difference_oracle():
    # the symbol is polynomial (holomorphic) in each slot when the slots are
    # treated as independent, so a real central difference along the slot
    # recovers the derivative used by the flow
    sym = kerr(1.0, 0.5)
    a = np.array([0.8 + 0.3j])
    p = np.array([0.1 - 0.2j])
    da, dp = char_rhs(sym, a, p)
    h = 1e-6
    u = np.conj(a) + p

    def f_star(uu):
        return sym.evaluate(uu, a)

    d_star = (f_star(u + h) - f_star(u - h)) / (2 * h)
    assert da[0] == pytest.approx(1j * d_star, abs=1e-8)

    def f_plain1(zz):
        return sym.evaluate(np.conj(a), zz)

    def f_plain2(zz):
        return sym.evaluate(u, zz)

    z1 = a + np.conj(p)
    d1 = (f_plain1(z1 + h) - f_plain1(z1 - h)) / (2 * h)
    d2 = (f_plain2(a + h) - f_plain2(a - h)) / (2 * h)
    assert dp[0] == pytest.approx(1j * (d1 - d2), abs=1e-8)


def test_initial_frame_layout():
    fr = VariationalFrame.initial(2)
    assert np.allclose(fr.d_alpha, np.concatenate([np.eye(2), np.zeros((2, 2))], axis=1))
    assert np.allclose(fr.d_p, np.concatenate([np.zeros((2, 2)), -np.eye(2)], axis=1))
    assert np.allclose(fr.flow_stack, np.eye(4))
    assert caustic_indicator(fr) == pytest.approx(1.0)


def test_phase_hessian_initial_frame():
    fr = VariationalFrame.initial(2)
    haa, haas, hss = phase_hessian_from_frame(fr)
    assert np.allclose(haa, 0)
    assert np.allclose(haas, -np.eye(2))
    assert np.allclose(hss, 0)


def test_harmonic_flow_closed_form():
    w, t = 0.9, 0.7
    alpha0 = np.array([1.0 + 0.5j])
    a_init = np.array([1.2 + 0.3j])
    traj = integrate(harmonic(w), alpha0, a_init, [0.0, t], tol=1e-12)
    end = traj.final
    phase = np.exp(1j * w * t)
    assert end.alpha[0] == pytest.approx(a_init[0] * phase, abs=TOL)
    p0 = -(np.conj(a_init[0]) - np.conj(alpha0[0]))
    assert end.p[0] == pytest.approx(p0 * np.conj(phase), abs=TOL)
    # quadratic diagonal symbol: the action integrand vanishes identically
    assert end.action == pytest.approx(-abs(a_init[0] - alpha0[0]) ** 2, abs=TOL)
    assert abs(end.action_imag) < TOL
    # frame rotates with the flow
    assert np.allclose(end.frame.d_alpha, [[phase, 0.0]], atol=1e-10)
    assert np.allclose(end.frame.d_p, [[0.0, -np.conj(phase)]], atol=1e-10)


def test_central_trajectory_keeps_zero_momentum():
    sym = kerr(1.0, 0.5)
    alpha0 = np.array([1.0 + 0.0j])
    traj = integrate(sym, alpha0, alpha0, [0.0, 0.5], tol=1e-12)
    assert np.max(np.abs([s.p for s in traj.states])) < 1e-10
    assert abs(traj.final.action) < 1e-10


def test_variational_rhs_finite_difference_oracle():
    # differentiate the full flow map numerically with respect to the real
    # and imaginary parts of alpha_init and compare the Wirtinger combinations
    # against the transported frame
    sym = kerr(1.0, 0.4)
    alpha0 = np.array([0.9 + 0.1j])
    a_init = np.array([1.0 + 0.2j])
    t = 0.4
    h = 1e-6

    def endpoint(ai):
        traj = integrate(sym, alpha0, np.array([ai]), [0.0, t], tol=1e-12)
        return traj.final.alpha[0], traj.final.p[0]

    ax_p, px_p = endpoint(a_init[0] + h)
    ax_m, px_m = endpoint(a_init[0] - h)
    ay_p, py_p = endpoint(a_init[0] + 1j * h)
    ay_m, py_m = endpoint(a_init[0] - 1j * h)
    da_dx = (ax_p - ax_m) / (2 * h)
    da_dy = (ay_p - ay_m) / (2 * h)
    dp_dx = (px_p - px_m) / (2 * h)
    dp_dy = (py_p - py_m) / (2 * h)
    da_dz = 0.5 * (da_dx - 1j * da_dy)
    da_dzs = 0.5 * (da_dx + 1j * da_dy)
    dp_dz = 0.5 * (dp_dx - 1j * dp_dy)
    dp_dzs = 0.5 * (dp_dx + 1j * dp_dy)

    fr = integrate(sym, alpha0, a_init, [0.0, t], tol=1e-12).final.frame
    assert fr.d_alpha[0, 0] == pytest.approx(da_dz, abs=1e-7)
    assert fr.d_alpha[0, 1] == pytest.approx(da_dzs, abs=1e-7)
    assert fr.d_p[0, 0] == pytest.approx(dp_dz, abs=1e-7)
    assert fr.d_p[0, 1] == pytest.approx(dp_dzs, abs=1e-7)


def test_energy_conservation():
    sym = kerr(1.0, 0.5)
    alpha0 = np.array([1.0 + 0.0j])
    a_init = np.array([1.1 - 0.15j])
    traj = integrate(sym, alpha0, a_init, np.linspace(0.0, 1.0, 9), tol=1e-10)
    w_vals = [effective_hamiltonian(sym, s.alpha, s.p) for s in traj.states]
    assert np.max(np.abs(np.array(w_vals) - w_vals[0])) < 1e-9


def test_frame_conservation_invariant():
    # A B^* + A^* B stays at its initial value along the flow, where
    # A, B are directional frame derivatives; probe with one direction
    sym = kerr(1.0, 0.5)
    alpha0 = np.array([1.0 + 0.0j])
    traj = integrate(sym, alpha0, alpha0, np.linspace(0.0, 1.0, 5), tol=1e-11)
    direction = np.array([1.0, 1.0])  # real perturbation of alpha(0)
    vals = []
    for s in traj.states:
        a_dir = s.frame.d_alpha @ direction
        b_dir = s.frame.d_p @ direction
        vals.append(a_dir @ b_dir + np.conj(a_dir) @ np.conj(b_dir)
                    + b_dir @ np.conj(b_dir))
    assert np.max(np.abs(np.array(vals) - vals[0])) < 1e-9


def test_group_property():
    # restarting the raw characteristic flow from the midpoint reproduces
    # the endpoint of the single long integration
    sym = kerr(1.0, 0.5)
    alpha0 = np.array([1.0 + 0.0j])
    a_init = np.array([1.1 + 0.05j])
    table = DerivativeTable(sym)
    t1, t2 = 0.3, 0.45
    full = integrate(sym, alpha0, a_init, [0.0, t1 + t2], tol=1e-12).final
    mid = integrate(sym, alpha0, a_init, [0.0, t1], tol=1e-12).final

    def rhs(t, y):
        a, p = y[:1], y[1:]
        da, dp = char_rhs(sym, a, p, table)
        return np.concatenate([da, dp])

    sol = solve_ivp(rhs, (0.0, t2), np.concatenate([mid.alpha, mid.p]),
                    method="DOP853", rtol=1e-13, atol=1e-13)
    assert sol.success
    assert np.allclose(sol.y[:1, -1], full.alpha, atol=1e-9)
    assert np.allclose(sol.y[1:, -1], full.p, atol=1e-9)


def test_transport_rate_vanishes_for_quadratic():
    sym = beam_splitter(1.0, 1.3, 0.4)
    fr = VariationalFrame.initial(2)
    haa, _, hss = phase_hessian_from_frame(fr)
    # quadratic symbols have constant hessians and haa = hss = 0 at t = 0
    k = transport_rate(sym, [0.5, 0.2j], [0.01, 0.0], haa, hss)
    assert abs(k) < 1e-14


def test_transport_rate_kerr_initial():
    # at t=0: hess_aa = 0, hess_ss = 0, so kappa = 0; after a short step the
    # rate is governed by H_aa hess_ss - H_ss hess_aa which we spot check
    sym = kerr(1.0, 0.5)
    table = DerivativeTable(sym)
    a = np.array([1.0 + 0.0j])
    haa = np.array([[0.2 + 0.1j]])
    hss = np.array([[-0.3 + 0.05j]])
    h_pp = table.hess_plain_plain(np.conj(a), a)[0, 0]
    h_ss = table.hess_star_star(np.conj(a), a)[0, 0]
    expected = 0.5j * (h_pp * hss[0, 0] - h_ss * haa[0, 0])
    assert transport_rate(table, a, [0.0], haa, hss) == pytest.approx(expected)


def test_integrate_rejects_bad_input():
    sym = kerr(1.0, 0.5)
    with pytest.raises(IntegrationError):
        integrate(sym, [1.0], [1.0], [0.1, 0.5])
    with pytest.raises(IntegrationError):
        integrate(sym, [1.0], [1.0], [0.0, 0.5, 0.3])
    with pytest.raises(IntegrationError):
        integrate(sym, [1.0], [1.0], [0.0, 0.5], tol=0.0)
    with pytest.raises(IntegrationError):
        integrate(sym, [1.0, 2.0], [1.0], [0.0, 0.5])
    with pytest.raises(IntegrationError):
        integrate(WickSymbol(1, {((0,), (1,)): 1.0}), [1.0], [1.0], [0.0, 0.5])


def test_integrate_time_zero_shortcut():
    sym = kerr(1.0, 0.5)
    traj = integrate(sym, [1.0], [1.2], [0.0])
    assert len(traj.states) == 1
    assert traj.final.action == pytest.approx(-0.04)
    assert traj.stats["nfev"] == 0
