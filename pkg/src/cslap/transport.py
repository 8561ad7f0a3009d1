"""Leading-order transport amplitude and the assembled Laplace asymptotics.

b0 is propagated along characteristics as d/dt b0 = kappa b0, where kappa
couples the symbol's pure second derivatives to the phase Hessian; the
integral of kappa is accumulated inside the characteristic ODE solve and
read off from the phase jet.  The value delivered to callers is the
leading asymptotics exp(S/hbar) * b0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characteristics import DerivativeTable, transport_rate
from .phase import PhaseJet, phase_at
from .symbols import WickSymbol, multi_power


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ObservableSpec:
    """F(0) = adag^m |alpha0><alpha0| a^q."""

    m: tuple
    q: tuple
    alpha0: tuple

    def __post_init__(self):
        n = len(self.alpha0)
        if len(self.m) != n or len(self.q) != n:
            raise ValueError("observable index lengths must match the number of modes")

    @staticmethod
    def create(m, q, alpha0) -> "ObservableSpec":
        alpha0 = np.asarray(alpha0, dtype=complex).reshape(-1)
        return ObservableSpec(m=tuple(int(k) for k in np.atleast_1d(m)),
                              q=tuple(int(k) for k in np.atleast_1d(q)),
                              alpha0=tuple(alpha0.tolist()))

    @property
    def alpha0_vec(self) -> np.ndarray:
        return np.asarray(self.alpha0, dtype=complex)


@dataclass(frozen=True)
class QuadSpec:
    """Tensor-product Gauss-Legendre grid for the completeness integral."""

    nodes: int = 32
    half_width: float | None = None    # default max(6 sqrt(hbar), 1.5)
    check_region: bool = False
    region_tol: float = 1e-8
    skip_exponent: float = 80.0        # drop nodes with |alpha0 - center|^2/hbar above this


def transport_coefficient(sym: WickSymbol, jet: PhaseJet,
                          table: DerivativeTable | None = None) -> complex:
    """kappa at the jet's base point, using the jet's own Hessian blocks."""
    table = table or DerivativeTable(sym)
    return transport_rate(table, jet.base_alpha, jet.grad_p, jet.hess_aa, jet.hess_astarastar)


def b0_from_jet(obs: ObservableSpec, jet: PhaseJet) -> complex:
    """b0 = conj(alpha_init)^m alpha_init^q exp(int kappa)."""
    a0 = jet.alpha_init
    return (multi_power(np.conj(a0), obs.m) * multi_power(a0, obs.q)
            * np.exp(jet.kappa_integral))


def b0_at(sym: WickSymbol, obs: ObservableSpec, alpha_target, t: float,
          ode_tol: float = 1e-10, newton_tol: float = 1e-12,
          table: DerivativeTable | None = None) -> complex:
    jet = phase_at(sym, obs.alpha0_vec, alpha_target, t,
                   ode_tol=ode_tol, newton_tol=newton_tol, table=table)
    return b0_from_jet(obs, jet)


def evaluate_asymptotic(sym: WickSymbol, obs: ObservableSpec, alpha_target, t: float,
                        hbar: float, ode_tol: float = 1e-10, newton_tol: float = 1e-12,
                        table: DerivativeTable | None = None) -> complex:
    """Leading Laplace value exp(S/hbar) * b0.

    Underflow of the exponential to exact 0 is allowed: the phase is
    nonpositive and far-away points are genuinely negligible.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    jet = phase_at(sym, obs.alpha0_vec, alpha_target, t,
                   ode_tol=ode_tol, newton_tol=newton_tol, table=table)
    return asymptotic_from_jet(obs, jet, hbar)


def asymptotic_from_jet(obs: ObservableSpec, jet: PhaseJet, hbar: float) -> complex:
    with np.errstate(under="ignore"):
        gauss = math.exp(jet.value / hbar) if jet.value / hbar > -745.0 else 0.0
    return gauss * b0_from_jet(obs, jet)


def _classical_flow_point(sym, alpha, t, tol, table):
    """Central flow g^t(alpha), valid for either sign of t."""
    from scipy.integrate import solve_ivp

    from .characteristics import classical_rhs

    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if t == 0:
        return alpha
    sol = solve_ivp(lambda _, y: classical_rhs(sym, y, table), (0.0, float(t)), alpha,
                    method="DOP853", rtol=tol, atol=tol)
    if not sol.success:
        raise QuadratureError(f"backward central flow failed: {sol.message}")
    return sol.y[:, -1]


def resolve_polynomial_initial(sym: WickSymbol, m: int, q: int, alpha_target, t: float,
                               hbar: float, quad: QuadSpec = QuadSpec(),
                               ode_tol: float = 1e-10, newton_tol: float = 1e-12) -> complex:
    """Completeness-relation quadrature for polynomial initial data (single mode).

    Approximates the solution with initial data conj(alpha)^m alpha^q by
    (pi hbar)^-1 integral of exp(S/hbar) b0 over alpha0, on a Gauss-Legendre
    tensor grid centered at the pullback of alpha_target under the central
    flow.
    """
    if sym.modes != 1:
        raise QuadratureError("completeness quadrature is implemented for one mode")
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    table = DerivativeTable(sym)
    alpha_target = np.asarray(alpha_target, dtype=complex).reshape(-1)
    center = _classical_flow_point(sym, alpha_target, -t, ode_tol, table)[0]
    half_width = quad.half_width if quad.half_width is not None else max(6.0 * math.sqrt(hbar), 1.5)

    value = _quad_pass(sym, m, q, alpha_target, t, hbar, center, half_width,
                       quad, table, ode_tol, newton_tol)
    if quad.check_region:
        # keep the node density comparable so only the region changes
        wide_quad = QuadSpec(nodes=int(math.ceil(1.3 * quad.nodes)),
                             half_width=quad.half_width, check_region=False,
                             region_tol=quad.region_tol, skip_exponent=quad.skip_exponent)
        wider = _quad_pass(sym, m, q, alpha_target, t, hbar, center, 1.3 * half_width,
                           wide_quad, table, ode_tol, newton_tol)
        if abs(wider - value) > quad.region_tol * (1.0 + abs(value)):
            raise QuadratureError(
                f"quadrature region too small: widening changes the value by {abs(wider - value):.3e}")
    return value


def _quad_pass(sym, m, q, alpha_target, t, hbar, center, half_width,
               quad, table, ode_tol, newton_tol):
    nodes, weights = np.polynomial.legendre.leggauss(quad.nodes)
    xs = center.real + half_width * nodes
    ys = center.imag + half_width * nodes
    w = half_width * weights
    total = 0j
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            a0 = complex(x, y)
            if abs(a0 - center) ** 2 / hbar > quad.skip_exponent:
                continue
            obs = ObservableSpec.create([m], [q], [a0])
            jet = phase_at(sym, obs.alpha0_vec, alpha_target, t,
                           ode_tol=ode_tol, newton_tol=newton_tol, table=table)
            total += w[i] * w[j] * asymptotic_from_jet(obs, jet, hbar)
    return total / (math.pi * hbar)
