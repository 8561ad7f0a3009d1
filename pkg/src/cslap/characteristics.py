"""Characteristic system of the phase equation, with action and frame transport.

The doubled-phase-space flow

    dalpha_k/dt = i dH/dastar_k(alpha* + p, alpha)
    dp_k/dt     = i { dH/dalpha_k(alpha*, alpha + p*) - dH/dalpha_k(alpha* + p, alpha) }

is integrated with the conjugate tracks alpha*, p* derived (not integrated);
the hermitian flow preserves that symmetry.  Alongside the trajectory we
carry

  * the accumulated action  -|alpha(0) - alpha0|^2 + int L dtau,
  * a variational frame (derivatives of alpha and p with respect to the
    2N Wirtinger initial coordinates (alpha(0), alpha*(0))), and
  * the integral of the leading transport coefficient kappa, which needs
    the phase Hessian available from the frame at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .symbols import WickSymbol, lagrangian


class IntegrationError(RuntimeError):
    """Integrator failure (step-size collapse or non-finite state)."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


def _swapconj(block: np.ndarray) -> np.ndarray:
    """Conjugate-track frame block: conjugate and swap the two column halves."""
    n = block.shape[0]
    return np.conj(np.concatenate([block[:, n:], block[:, :n]], axis=1))


@dataclass(frozen=True)
class VariationalFrame:
    """Wirtinger derivatives of (alpha, p) w.r.t. (alpha(0), alpha*(0))."""

    d_alpha: np.ndarray  # (N, 2N)
    d_p: np.ndarray      # (N, 2N)

    @property
    def d_alpha_star(self) -> np.ndarray:
        return _swapconj(self.d_alpha)

    @property
    def d_p_star(self) -> np.ndarray:
        return _swapconj(self.d_p)

    @property
    def flow_stack(self) -> np.ndarray:
        """2N x 2N matrix [d_alpha; d_alpha_star]; its conditioning detects caustics."""
        return np.concatenate([self.d_alpha, self.d_alpha_star], axis=0)

    @property
    def momentum_stack(self) -> np.ndarray:
        return np.concatenate([self.d_p, self.d_p_star], axis=0)

    @staticmethod
    def initial(n: int) -> "VariationalFrame":
        eye = np.eye(n, dtype=complex)
        zero = np.zeros((n, n), dtype=complex)
        return VariationalFrame(
            d_alpha=np.concatenate([eye, zero], axis=1),
            d_p=np.concatenate([zero, -eye], axis=1),
        )


@dataclass(frozen=True)
class CharState:
    alpha: np.ndarray
    p: np.ndarray
    action: float
    frame: VariationalFrame
    time: float
    kappa_integral: complex = 0j
    action_imag: float = 0.0  # integration defect; the action integrand is real


@dataclass
class Trajectory:
    states: list
    stats: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def final(self) -> CharState:
        return self.states[-1]


class DerivativeTable:
    """Precomputed first and second derivative symbols of a WickSymbol."""

    def __init__(self, sym: WickSymbol):
        n = sym.modes
        self.sym = sym
        self.modes = n
        self.d_star = [sym.derivative("star", k) for k in range(n)]
        self.d_plain = [sym.derivative("plain", k) for k in range(n)]
        self.d_star_star = [[self.d_star[j].derivative("star", k) for k in range(n)] for j in range(n)]
        self.d_star_plain = [[self.d_star[j].derivative("plain", k) for k in range(n)] for j in range(n)]
        self.d_plain_plain = [[self.d_plain[j].derivative("plain", k) for k in range(n)] for j in range(n)]

    def grad_star(self, zstar, z) -> np.ndarray:
        return np.array([d.evaluate(zstar, z) for d in self.d_star])

    def grad_plain(self, zstar, z) -> np.ndarray:
        return np.array([d.evaluate(zstar, z) for d in self.d_plain])

    def _hess(self, table, zstar, z) -> np.ndarray:
        n = self.modes
        return np.array([[table[j][k].evaluate(zstar, z) for k in range(n)] for j in range(n)])

    def hess_star_star(self, zstar, z) -> np.ndarray:
        return self._hess(self.d_star_star, zstar, z)

    def hess_star_plain(self, zstar, z) -> np.ndarray:
        return self._hess(self.d_star_plain, zstar, z)

    def hess_plain_plain(self, zstar, z) -> np.ndarray:
        return self._hess(self.d_plain_plain, zstar, z)


def classical_rhs(sym: WickSymbol, alpha, table: DerivativeTable | None = None) -> np.ndarray:
    """Central flow dalpha/dt = i dH/dastar(conj(alpha), alpha)."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    table = table or DerivativeTable(sym)
    return 1j * table.grad_star(np.conj(alpha), alpha)


def char_rhs(sym: WickSymbol, alpha, p, table: DerivativeTable | None = None):
    """Right-hand side of the (alpha, p) characteristic system."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    p = np.asarray(p, dtype=complex).reshape(-1)
    table = table or DerivativeTable(sym)
    astar, pstar = np.conj(alpha), np.conj(p)
    d_alpha = 1j * table.grad_star(astar + p, alpha)
    d_p = 1j * (table.grad_plain(astar, alpha + pstar) - table.grad_plain(astar + p, alpha))
    return d_alpha, d_p


def variational_rhs(sym: WickSymbol, alpha, p, frame: VariationalFrame,
                    table: DerivativeTable | None = None):
    """Time derivative of the frame blocks (chain rule through the shifted arguments)."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    p = np.asarray(p, dtype=complex).reshape(-1)
    table = table or DerivativeTable(sym)
    astar, pstar = np.conj(alpha), np.conj(p)
    arg1 = (astar + p, alpha)          # argument of the alpha-equation
    arg2 = (astar, alpha + pstar)      # first bracket of the p-equation

    da, dp = frame.d_alpha, frame.d_p
    das, dps = frame.d_alpha_star, frame.d_p_star

    h_ss_1 = table.hess_star_star(*arg1)
    h_sp_1 = table.hess_star_plain(*arg1)
    h_pp_1 = table.hess_plain_plain(*arg1)
    h_sp_2 = table.hess_star_plain(*arg2)
    h_pp_2 = table.hess_plain_plain(*arg2)

    d_da = 1j * (h_ss_1 @ (das + dp) + h_sp_1 @ da)
    # d/dalpha_k of H: star-slot variation enters via hess(star, plain)^T
    d_dp = 1j * (h_sp_2.T @ das + h_pp_2 @ (da + dps)
                 - h_sp_1.T @ (das + dp) - h_pp_1 @ da)
    return d_da, d_dp


def phase_hessian_from_frame(frame: VariationalFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Wirtinger Hessian blocks of the phase along a characteristic.

    The gradient of the phase on the trajectory is (p, p*) as a function of
    (alpha, alpha*); its Jacobian is [d_p; d_p*] [d_alpha; d_alpha*]^{-1}.
    Returns (hess_aa, hess_aastar, hess_astarastar).
    """
    n = frame.d_alpha.shape[0]
    full = np.linalg.solve(frame.flow_stack.T, frame.momentum_stack.T).T
    return full[:n, :n], full[:n, n:], full[n:, n:]


def caustic_indicator(frame: VariationalFrame) -> float:
    """Smallest singular value of the flow-map Jacobian stack."""
    return float(np.linalg.svd(frame.flow_stack, compute_uv=False)[-1])


def transport_rate(sym_or_table, alpha, p, hess_aa, hess_astarastar) -> complex:
    """Leading transport coefficient kappa with d/dt b0 = kappa * b0.

    kappa = (i/2) sum_{l,m} { H_aa(a*, a+p*)[l,m] hess_astarastar[l,m]
                              - H_a*a*(a*+p, a)[l,m] hess_aa[l,m] }
    """
    table = sym_or_table if isinstance(sym_or_table, DerivativeTable) else DerivativeTable(sym_or_table)
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    p = np.asarray(p, dtype=complex).reshape(-1)
    astar, pstar = np.conj(alpha), np.conj(p)
    h_pp = table.hess_plain_plain(astar, alpha + pstar)
    h_ss = table.hess_star_star(astar + p, alpha)
    return 0.5j * (np.sum(h_pp * hess_astarastar) - np.sum(h_ss * hess_aa))


# -- packed ODE state ----------------------------------------------------
# complex layout: [alpha(N), p(N), action(1), kappa_int(1), d_alpha(2N^2), d_p(2N^2)]

def _pack(alpha, p, action, kappa, d_alpha, d_p) -> np.ndarray:
    return np.concatenate([
        alpha, p, [complex(action)], [complex(kappa)], d_alpha.reshape(-1), d_p.reshape(-1)])


def _unpack(y: np.ndarray, n: int):
    alpha = y[:n]
    p = y[n:2 * n]
    action = y[2 * n]
    kappa = y[2 * n + 1]
    base = 2 * n + 2
    d_alpha = y[base:base + 2 * n * n].reshape(n, 2 * n)
    d_p = y[base + 2 * n * n:].reshape(n, 2 * n)
    return alpha, p, action, kappa, d_alpha, d_p


def integrate(sym: WickSymbol, alpha0, alpha_init, times: Sequence[float],
              tol: float = 1e-10, table: DerivativeTable | None = None) -> Trajectory:
    """Integrate the characteristic system from alpha_init with momentum seeded by alpha0.

    Initial momentum p(0) = -(conj(alpha_init) - conj(alpha0)); the action
    starts at -|alpha_init - alpha0|^2 so the endpoint action is the phase
    directly.  Local error per step is controlled by `tol` (absolute and
    relative) with an adaptive 8(5,3) embedded pair.
    """
    if not sym.is_hermitian():
        raise IntegrationError("symbol must be hermitian")
    if tol <= 0:
        raise IntegrationError("tol must be positive")
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0) and len(times) > 1:
        if times[0] != 0.0:
            raise IntegrationError("times must start at 0")
        raise IntegrationError("times must be strictly increasing")
    alpha0 = np.asarray(alpha0, dtype=complex).reshape(-1)
    alpha_init = np.asarray(alpha_init, dtype=complex).reshape(-1)
    n = sym.modes
    if len(alpha0) != n or len(alpha_init) != n:
        raise IntegrationError(f"initial data length does not match modes {n}")
    table = table or DerivativeTable(sym)

    p0 = -(np.conj(alpha_init) - np.conj(alpha0))
    frame0 = VariationalFrame.initial(n)
    action0 = -float(np.sum(np.abs(alpha_init - alpha0) ** 2))
    y0 = _pack(alpha_init, p0, action0, 0j, frame0.d_alpha, frame0.d_p)

    def rhs(t, y):
        alpha, p, _, _, d_alpha, d_p = _unpack(y, n)
        frame = VariationalFrame(d_alpha, d_p)
        da, dp = char_rhs(sym, alpha, p, table)
        dda, ddp = variational_rhs(sym, alpha, p, frame, table)
        lag = lagrangian(sym, alpha, p)
        hess_aa, _, hess_ss = phase_hessian_from_frame(frame)
        kap = transport_rate(table, alpha, p, hess_aa, hess_ss)
        return _pack(da, dp, lag, kap, dda, ddp)

    def state_at(t, y):
        alpha, p, action, kappa, d_alpha, d_p = _unpack(y, n)
        return CharState(alpha=alpha.copy(), p=p.copy(), action=float(np.real(action)),
                         frame=VariationalFrame(d_alpha.copy(), d_p.copy()),
                         time=float(t), kappa_integral=complex(kappa),
                         action_imag=float(np.imag(action)))

    if times[-1] == 0.0:
        return Trajectory(states=[state_at(t, y0) for t in times],
                          stats={"nfev": 0, "steps": 0})

    # the user tolerance bounds the *accumulated* drift over the window, so
    # the per-step solver tolerance gets a safety factor
    solver_tol = max(0.01 * tol, 1e-14)
    sol = solve_ivp(rhs, (0.0, float(times[-1])), y0, method="DOP853",
                    t_eval=times, rtol=max(solver_tol, 2.3e-14), atol=solver_tol)
    if not sol.success:
        raise IntegrationError(f"integrator failed: {sol.message}",
                               time=float(sol.t[-1]) if len(sol.t) else 0.0)
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError("non-finite state (blowup)", time=float(sol.t[-1]))

    states = [state_at(t, sol.y[:, i]) for i, t in enumerate(sol.t)]
    return Trajectory(states=states, stats={"nfev": sol.nfev, "steps": len(sol.t)})
