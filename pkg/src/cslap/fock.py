"""Exact quantum oracle on a truncated Fock space with hbar-scaled ladders.

The commutator convention is [a, adag] = hbar, realized in the number basis
as a|n> = sqrt(hbar n)|n-1>.  Coherent amplitudes then carry alpha^n /
sqrt(n! hbar^n), which reproduces the Gaussian overlap
|<alpha0|alpha>|^2 = exp(-|alpha - alpha0|^2 / hbar) without rescaling.
Time evolution uses one dense eigendecomposition per Hamiltonian, cached
and reused across times and states.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .symbols import WickSymbol
from .transport import ObservableSpec

MAX_TOTAL_DIM = 2 ** 16


class FockError(RuntimeError):
    pass


class TailError(FockError):
    """Coherent-state truncation tail above tolerance."""


@dataclass(frozen=True)
class FockSpace:
    modes: int
    cutoffs: tuple
    hbar: float

    def __post_init__(self):
        if len(self.cutoffs) != self.modes:
            raise FockError("one cutoff per mode required")
        if self.hbar <= 0:
            raise FockError("hbar must be positive")
        if self.total_dim > MAX_TOTAL_DIM:
            raise FockError(f"total dimension {self.total_dim} exceeds {MAX_TOTAL_DIM}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.cutoffs))

    @staticmethod
    def create(modes: int, cutoffs, hbar: float) -> "FockSpace":
        cut = tuple(int(c) for c in np.atleast_1d(cutoffs))
        if len(cut) == 1 and modes > 1:
            cut = cut * modes
        return FockSpace(modes=modes, cutoffs=cut, hbar=float(hbar))


class OperatorMatrix:
    """Dense operator with an optional hermitian flag and a cached eigendecomposition."""

    def __init__(self, matrix: np.ndarray, hermitian: bool = False):
        self.matrix = np.asarray(matrix, dtype=complex)
        if hermitian and np.max(np.abs(self.matrix - self.matrix.conj().T)) > 1e-12:
            raise FockError("matrix marked hermitian deviates from its adjoint")
        self.hermitian = hermitian
        self._eig = None

    def eig(self):
        if self._eig is None:
            if not self.hermitian:
                raise FockError("eigendecomposition requires a hermitian operator")
            try:
                vals, vecs = np.linalg.eigh(self.matrix)
            except np.linalg.LinAlgError as exc:
                raise FockError(f"eigendecomposition failed: {exc}") from exc
            self._eig = (vals, vecs)
        return self._eig


def _single_mode_annihilation(dim: int, hbar: float) -> np.ndarray:
    return np.diag(np.sqrt(hbar * np.arange(1, dim)), k=1)


def annihilation(space: FockSpace, mode: int) -> OperatorMatrix:
    """a_k acting on the tensor-product space (identity on the other modes)."""
    if not 0 <= mode < space.modes:
        raise FockError(f"mode {mode} out of range")
    mats = [np.eye(d, dtype=complex) for d in space.cutoffs]
    mats[mode] = _single_mode_annihilation(space.cutoffs[mode], space.hbar)
    return OperatorMatrix(reduce(np.kron, mats))


def creation(space: FockSpace, mode: int) -> OperatorMatrix:
    return OperatorMatrix(annihilation(space, mode).matrix.conj().T)


def coherent_tail(alpha_abs2: float, hbar: float, dim: int) -> float:
    """Probability mass of a single-mode coherent state above the cutoff."""
    lam = alpha_abs2 / hbar
    terms = np.exp(-lam + np.arange(dim) * math.log(lam) -
                   np.array([math.lgamma(n + 1) for n in range(dim)])) if lam > 0 else None
    if lam == 0:
        return 0.0
    return float(max(0.0, 1.0 - np.sum(terms)))


def coherent_vector(space: FockSpace, alpha, tail_tol: float = 1e-10) -> np.ndarray:
    """Tensor-product coherent state with amplitudes e^{-|a|^2/2h} a^n / sqrt(n! h^n)."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if len(alpha) != space.modes:
        raise FockError("alpha length must match modes")
    factors = []
    for k, (a, dim) in enumerate(zip(alpha, space.cutoffs)):
        tail = coherent_tail(abs(a) ** 2, space.hbar, dim)
        if tail > tail_tol:
            needed = required_cutoff(abs(a) ** 2, space.hbar, tail_tol)
            raise TailError(
                f"mode {k}: truncation tail {tail:.3e} above {tail_tol:.1e}; "
                f"cutoff of at least {needed} required")
        n = np.arange(dim)
        log_mag = -abs(a) ** 2 / (2 * space.hbar) + n * math.log(max(abs(a), 1e-300)) \
            - 0.5 * (np.array([math.lgamma(i + 1) for i in n]) + n * math.log(space.hbar))
        if abs(a) == 0:
            vec = np.zeros(dim, dtype=complex)
            vec[0] = 1.0
        else:
            phase = np.exp(1j * n * np.angle(a))
            vec = np.exp(log_mag) * phase
        factors.append(vec)
    return reduce(np.kron, factors)


def required_cutoff(alpha_abs2: float, hbar: float, tail_tol: float) -> int:
    d = 4
    while coherent_tail(alpha_abs2, hbar, d) > tail_tol:
        d *= 2
        if d > MAX_TOTAL_DIM:
            raise FockError("cutoff search exceeded the dimension cap")
    lo, hi = 1, d
    while lo < hi:
        mid = (lo + hi) // 2
        if coherent_tail(alpha_abs2, hbar, mid) > tail_tol:
            lo = mid + 1
        else:
            hi = mid
    return max(1, lo)


def wick_operator(space: FockSpace, sym: WickSymbol) -> OperatorMatrix:
    """Normal-ordered operator sum c(l,s) adag^l a^s."""
    if sym.modes != space.modes:
        raise FockError("symbol and space mode counts differ")
    ann = [annihilation(space, k).matrix for k in range(space.modes)]
    cre = [m.conj().T for m in ann]
    dim = space.total_dim
    out = np.zeros((dim, dim), dtype=complex)
    for (l, s), coeff in sym.terms.items():
        term = np.eye(dim, dtype=complex)
        for k, e in enumerate(l):
            for _ in range(e):
                term = cre[k] @ term
        for k, e in enumerate(s):
            for _ in range(e):
                term = term @ ann[k]
        out += coeff * term
    max_deg = max((max(space_deg) for space_deg in
                   (sym.max_degree("star"), sym.max_degree("plain"))), default=0)
    if any(d <= max_deg for d in space.cutoffs):
        warnings.warn("operator degree reaches the truncation boundary; increase cutoffs",
                      RuntimeWarning, stacklevel=2)
    return OperatorMatrix(out, hermitian=sym.is_hermitian())


_op_cache: dict = {}


def cached_operator(space: FockSpace, sym: WickSymbol) -> OperatorMatrix:
    key = (space, sym)
    op = _op_cache.get(key)
    if op is None:
        if len(_op_cache) > 64:
            _op_cache.clear()
        op = wick_operator(space, sym)
        _op_cache[key] = op
    return op


def evolve(space: FockSpace, op: OperatorMatrix, vec: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t / hbar) vec via the cached eigendecomposition of H."""
    if not op.hermitian:
        raise FockError("evolution requires a hermitian Hamiltonian")
    vals, vecs = op.eig()
    coeffs = vecs.conj().T @ vec
    return vecs @ (np.exp(-1j * vals * t / space.hbar) * coeffs)


def expectation(space: FockSpace, sym: WickSymbol, obs: ObservableSpec, alpha,
                t: float, tail_tol: float = 1e-10) -> complex:
    """<alpha| e^{iHt/h} adag^m |a0><a0| a^q e^{-iHt/h} |alpha>, exactly on the truncation."""
    v_alpha = coherent_vector(space, alpha, tail_tol=tail_tol)
    v_a0 = coherent_vector(space, obs.alpha0_vec, tail_tol=tail_tol)
    op = cached_operator(space, sym)
    u = evolve(space, op, v_alpha, t)
    ann = [annihilation(space, k).matrix for k in range(space.modes)]

    def apply_powers(vec, powers):
        for k, e in enumerate(powers):
            for _ in range(e):
                vec = ann[k] @ vec
        return vec

    left = np.vdot(v_a0, apply_powers(u, obs.m))    # <a0| a^m u>
    right = np.vdot(v_a0, apply_powers(u, obs.q))   # <a0| a^q u>
    return complex(np.conj(left) * right)


def cutoff_search(modes: int, hbar: float, alphas, sym: WickSymbol,
                  target_tail: float = 1e-10) -> tuple:
    """Smallest per-mode cutoffs covering all coherent tails plus the symbol degree."""
    if target_tail <= 0:
        raise FockError("target_tail must be positive")
    alphas = [np.asarray(a, dtype=complex).reshape(-1) for a in alphas]
    deg = [max(l, s) for l, s in zip(sym.max_degree("star"), sym.max_degree("plain"))]
    cutoffs = []
    for k in range(modes):
        amax2 = max((abs(a[k]) ** 2 for a in alphas), default=0.0)
        d = required_cutoff(amax2, hbar, target_tail)
        cutoffs.append(d + deg[k] + 1)
    total = int(np.prod(cutoffs))
    if total > MAX_TOTAL_DIM:
        raise FockError(f"required dimension {total} exceeds {MAX_TOTAL_DIM}")
    return tuple(cutoffs)
