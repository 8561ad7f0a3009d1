"""Phase construction near the central trajectory.

The flow map alpha(0) -> alpha(t) of the characteristic system (with the
momentum seeded from alpha0) is inverted by a damped Newton iteration in
the 2N real coordinates, using the variational frame's endpoint Jacobian.
The phase value is the accumulated action, the gradient is the endpoint
momentum pair (p, p*), and the Hessian blocks come from a 2N x 2N solve
against the frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .characteristics import (
    CharState,
    DerivativeTable,
    Trajectory,
    caustic_indicator,
    integrate,
    phase_hessian_from_frame,
)
from .symbols import WickSymbol


class NewtonError(RuntimeError):
    pass


class CausticError(RuntimeError):
    pass


def initial_momentum(alpha0, alpha_init) -> np.ndarray:
    """p(0) = -(conj(alpha_init) - conj(alpha0)), the gradient of the initial phase."""
    alpha0 = np.asarray(alpha0, dtype=complex).reshape(-1)
    alpha_init = np.asarray(alpha_init, dtype=complex).reshape(-1)
    if len(alpha0) != len(alpha_init):
        raise ValueError("alpha0 and alpha_init must have equal length")
    return -(np.conj(alpha_init) - np.conj(alpha0))


def real_coords(alpha: np.ndarray) -> np.ndarray:
    """(Re alpha_1..N, Im alpha_1..N) layout."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    return np.concatenate([alpha.real, alpha.imag])


def from_real_coords(v: np.ndarray) -> np.ndarray:
    n = len(v) // 2
    return v[:n] + 1j * v[n:]


def real_jacobian(wirtinger_block: np.ndarray) -> np.ndarray:
    """Convert an N x 2N Wirtinger derivative block to the real 2N x 2N Jacobian.

    With d(alpha) = J1 d(alpha(0)) + J2 d(alpha*(0)) and alpha(0) = x + iy,
    the real Jacobian maps (dx, dy) to (d Re alpha, d Im alpha).
    """
    n = wirtinger_block.shape[0]
    j1 = wirtinger_block[:, :n]
    j2 = wirtinger_block[:, n:]
    dx = j1 + j2
    dy = 1j * (j1 - j2)
    return np.block([[dx.real, dy.real], [dx.imag, dy.imag]])


@dataclass
class PhaseJet:
    """Value, gradient, and Hessian blocks of the phase at one (alpha, t)."""

    value: float
    grad_p: np.ndarray
    grad_pstar: np.ndarray
    hess_aa: np.ndarray
    hess_aastar: np.ndarray
    hess_astarastar: np.ndarray
    base_alpha: np.ndarray
    time: float
    alpha_init: np.ndarray
    kappa_integral: complex
    diagnostics: dict = field(default_factory=dict)

    def real_hessian(self) -> np.ndarray:
        """Second derivatives in the (Re alpha, Im alpha) coordinates."""
        aa, aas, ss = self.hess_aa, self.hess_aastar, self.hess_astarastar
        hxx = aa + aas + aas.T + ss
        hxy = 1j * (aa - aas + aas.T - ss)
        hyy = -(aa - aas - aas.T + ss)
        out = np.block([[hxx, hxy], [hxy.T, hyy]])
        return out.real


@dataclass
class InversionResult:
    alpha_init: np.ndarray
    iterations: int
    trajectory: Trajectory


_central_cache: dict = {}


def central_trajectory(sym: WickSymbol, alpha0, t: float, tol: float,
                       table: DerivativeTable | None = None) -> Trajectory:
    """Trajectory through alpha0 itself (p = 0); cached per (sym, alpha0, t, tol)."""
    alpha0 = np.asarray(alpha0, dtype=complex).reshape(-1)
    key = (sym, tuple(alpha0.tolist()), float(t), float(tol))
    traj = _central_cache.get(key)
    if traj is None:
        times = [0.0, float(t)] if t > 0 else [0.0]
        traj = integrate(sym, alpha0, alpha0, times, tol=tol, table=table)
        if len(_central_cache) > 512:
            _central_cache.clear()
        _central_cache[key] = traj
    return traj


def invert_flow_map(sym: WickSymbol, alpha0, alpha_target, t: float,
                    newton_tol: float = 1e-12, max_iter: int = 25,
                    ode_tol: float = 1e-10,
                    table: DerivativeTable | None = None) -> InversionResult:
    """Find alpha_init whose characteristic lands on alpha_target at time t."""
    alpha0 = np.asarray(alpha0, dtype=complex).reshape(-1)
    alpha_target = np.asarray(alpha_target, dtype=complex).reshape(-1)
    table = table or DerivativeTable(sym)
    target_r = real_coords(alpha_target)
    times = [0.0, float(t)] if t > 0 else [0.0]

    central = central_trajectory(sym, alpha0, t, ode_tol, table=table)
    center_end = central.final
    jac_central = real_jacobian(center_end.frame.d_alpha)
    # initial guess: pull the offset from the central endpoint back through
    # the central trajectory's linearized flow
    offset = real_coords(alpha_target) - real_coords(center_end.alpha)
    try:
        delta0 = np.linalg.solve(jac_central, offset)
    except np.linalg.LinAlgError as exc:
        raise CausticError("central flow Jacobian is singular") from exc
    guess = from_real_coords(real_coords(alpha0) + delta0)

    traj = integrate(sym, alpha0, guess, times, tol=ode_tol, table=table)
    residual = real_coords(traj.final.alpha) - target_r
    res_norm = float(np.linalg.norm(residual))

    for it in range(1, max_iter + 1):
        if res_norm <= newton_tol:
            return InversionResult(alpha_init=guess, iterations=it - 1, trajectory=traj)
        frame = traj.final.frame
        if caustic_indicator(frame) < 1e-10:
            raise CausticError(
                f"flow-map Jacobian singular at t={t} (caustic indicator below 1e-10)")
        jac = real_jacobian(frame.d_alpha)
        step = np.linalg.solve(jac, residual)
        # damped update: halve until the residual decreases
        lam = 1.0
        for _ in range(30):
            trial = from_real_coords(real_coords(guess) - lam * step)
            trial_traj = integrate(sym, alpha0, trial, times, tol=ode_tol, table=table)
            trial_res = real_coords(trial_traj.final.alpha) - target_r
            trial_norm = float(np.linalg.norm(trial_res))
            if trial_norm < res_norm or trial_norm <= newton_tol:
                break
            lam *= 0.5
        guess, traj, residual, res_norm = trial, trial_traj, trial_res, trial_norm
    if res_norm <= newton_tol:
        return InversionResult(alpha_init=guess, iterations=max_iter, trajectory=traj)
    raise NewtonError(
        f"Newton did not converge in {max_iter} iterations (residual {res_norm:.3e}); "
        "target may be outside the validity neighborhood")


def phase_at(sym: WickSymbol, alpha0, alpha_target, t: float,
             ode_tol: float = 1e-10, newton_tol: float = 1e-12,
             max_iter: int = 25, table: DerivativeTable | None = None) -> PhaseJet:
    """Phase jet at (alpha_target, t): value, gradient, Hessian, and diagnostics."""
    table = table or DerivativeTable(sym)
    inv = invert_flow_map(sym, alpha0, alpha_target, t,
                          newton_tol=newton_tol, max_iter=max_iter,
                          ode_tol=ode_tol, table=table)
    end = inv.trajectory.final
    frame = end.frame
    indicator = caustic_indicator(frame)
    stack = frame.flow_stack
    cond = float(np.linalg.cond(stack))
    if cond > 1e12:
        raise CausticError(f"Hessian solve ill-conditioned (cond {cond:.3e})")
    hess_aa, hess_aastar, hess_ss = phase_hessian_from_frame(frame)
    p = end.p
    return PhaseJet(
        value=end.action,
        grad_p=p.copy(),
        grad_pstar=np.conj(p),
        hess_aa=hess_aa,
        hess_aastar=hess_aastar,
        hess_astarastar=hess_ss,
        base_alpha=np.asarray(alpha_target, dtype=complex).reshape(-1),
        time=float(t),
        alpha_init=inv.alpha_init,
        kappa_integral=end.kappa_integral,
        diagnostics={
            "newton_iterations": inv.iterations,
            "caustic_indicator": indicator,
            "condition_number": cond,
            "im_action": end.action_imag,
        },
    )
