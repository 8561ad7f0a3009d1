import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cslap.symbols import (
    SymbolError,
    WickSymbol,
    beam_splitter,
    cross_kerr,
    effective_hamiltonian,
    harmonic,
    kerr,
    lagrangian,
    symbol_preset,
)


def test_evaluate_kerr_basic():
    sym = kerr(1.0, 0.5)
    assert sym.evaluate([1.0], [1.0]) == pytest.approx(1.5)


def test_evaluate_no_constant_term_at_origin():
    sym = kerr(0.7, 0.3)
    assert sym.evaluate([0.0], [0.0]) == 0.0


def test_evaluate_kerr_independent_arguments():
    # monomial-by-monomial: 1*2*i + 0.5*4*(i^2) = -2 + 2i
    sym = kerr(1.0, 0.5)
    assert sym.evaluate([2.0], [1j]) == pytest.approx(-2.0 + 2.0j)


def test_evaluate_dimension_mismatch():
    sym = kerr(1.0, 0.5)
    with pytest.raises(SymbolError):
        sym.evaluate([1.0, 2.0], [1.0])


def test_derivative_star_of_harmonic():
    sym = harmonic(0.7)
    d = sym.derivative("star", 0)
    assert d.terms == {(((0,), (1,))): 0.7}


def test_derivative_no_dependence_is_empty():
    sym = WickSymbol(1, {((2,), (0,)): 1.0})
    assert sym.derivative("plain", 0).terms == {}


def test_second_derivative_kerr():
    # d^2/dz^2 of mu zstar^2 z^2 = 2 mu zstar^2
    sym = WickSymbol(1, {((2,), (2,)): 0.5})
    dd = sym.derivative("plain", 0).derivative("plain", 0)
    assert dd.terms == {((2,), (0,)): 1.0}


def test_hermitian_diagonal_real():
    assert harmonic(1.0).is_hermitian()


def test_non_hermitian_unpaired_term():
    assert not WickSymbol(1, {((0,), (1,)): 1.0}).is_hermitian()


def test_hermitian_conjugate_pair_two_modes():
    sym = WickSymbol(2, {((1, 0), (0, 1)): 0.3, ((0, 1), (1, 0)): 0.3})
    assert sym.is_hermitian()


def test_symmetrized_repairs_input():
    sym = WickSymbol(1, {((0,), (1,)): 1.0 + 2.0j})
    assert sym.symmetrized().is_hermitian()


def test_effective_hamiltonian_zero_momentum():
    sym = kerr(1.0, 0.5)
    assert effective_hamiltonian(sym, [1.2 + 0.3j], [0.0]) == 0.0


def test_effective_hamiltonian_harmonic_hand_expansion():
    omega, c = 1.0, 0.2 + 0.1j
    sym = harmonic(omega)
    # -i omega ((1 + conj(c)) - (1 + c)) = -2 omega Im(c)
    w = effective_hamiltonian(sym, [1.0], [c])
    assert w == pytest.approx(-2.0 * omega * np.imag(c))
    assert abs(np.imag(w)) < 1e-14


def test_effective_hamiltonian_matches_double_evaluation():
    sym = kerr(1.0, 0.5)
    alpha, p = np.array([1.0 + 0j]), np.array([0.1 + 0j])
    expected = -1j * (sym.evaluate(np.conj(alpha), alpha + np.conj(p))
                      - sym.evaluate(np.conj(alpha) + p, alpha))
    assert effective_hamiltonian(sym, alpha, p) == pytest.approx(expected)
    assert abs(np.imag(expected)) < 1e-14


def test_lagrangian_zero_momentum():
    sym = kerr(1.0, 0.5)
    assert lagrangian(sym, [0.8 - 0.2j], [0.0]) == 0.0


def test_lagrangian_harmonic_expansion():
    # for H = omega zstar z: dH/dzstar(a*+p, a) = omega a, dH/dz(a*, a+p*) = omega a*
    omega, a, p = 0.9, 0.4 + 0.7j, 0.05 - 0.02j
    sym = harmonic(omega)
    expected = 1j * (p * omega * a - np.conj(p) * omega * np.conj(a)
                     - omega * (np.conj(a) + p) * a
                     + omega * np.conj(a) * (a + np.conj(p)))
    assert lagrangian(sym, [a], [p]) == pytest.approx(expected)


def test_lagrangian_real_for_conjugate_momenta():
    rng = np.random.default_rng(7)
    sym = kerr(1.0, 0.5)
    for _ in range(20):
        a = rng.normal(size=1) + 1j * rng.normal(size=1)
        p = rng.normal(size=1) + 1j * rng.normal(size=1)
        val = lagrangian(sym, a, p)
        assert abs(np.imag(val)) <= 1e-12 * (1 + abs(val))


def test_diagonal_reality_hermitian():
    rng = np.random.default_rng(11)
    sym = cross_kerr(1.0, 1.3, 0.2)
    for _ in range(10):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert abs(np.imag(sym.evaluate(np.conj(a), a))) < 1e-12


@st.composite
def small_symbols(draw):
    n_terms = draw(st.integers(1, 4))
    terms = []
    for _ in range(n_terms):
        l = (draw(st.integers(0, 3)),)
        s = (draw(st.integers(0, 3)),)
        mag = st.floats(-2, 2).filter(lambda x: x == 0.0 or abs(x) > 1e-3)
        c = complex(draw(mag), draw(mag))
        terms.append(((l, s), c))
    return WickSymbol(1, terms)


@settings(deadline=None, max_examples=50)
@given(small_symbols())
def test_derivative_commutativity(sym):
    a = sym.derivative("star", 0).derivative("plain", 0)
    b = sym.derivative("plain", 0).derivative("star", 0)
    assert a == b


@settings(deadline=None, max_examples=50)
@given(small_symbols(), st.floats(-3, 3), st.floats(-3, 3))
def test_canonical_form_add_then_cancel(sym, re, im):
    c = complex(re, im)
    # key (5, 5) is outside the strategy's degree range, so cancellation is exact
    assert sym.with_term((5,), (5,), c).with_term((5,), (5,), -c) == sym


def test_degree_cap():
    with pytest.raises(SymbolError):
        WickSymbol(1, {((21,), (0,)): 1.0})


def test_json_roundtrip():
    sym = beam_splitter(1.0, 1.3, 0.4)
    assert WickSymbol.from_json_dict(sym.to_json_dict()) == sym


def test_preset_expansion():
    sym = symbol_preset({"preset": "kerr", "omega": 1.0, "mu": 0.5})
    assert sym == kerr(1.0, 0.5)
    with pytest.raises(SymbolError):
        symbol_preset({"preset": "nope"})
    with pytest.raises(SymbolError):
        symbol_preset({"preset": "kerr", "omega": 1.0})
