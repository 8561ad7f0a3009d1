"""Polynomial algebra for normal-ordered (Wick) symbols.

A symbol is a finite sum  sum_{l,s} c_{ls} zstar^l z^s  over multi-index
pairs (l, s).  The two arguments are treated as independent complex
variables (Wirtinger style): the characteristic system evaluates the same
polynomial at shifted, non-conjugate points such as (alpha* + p, alpha).
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

MAX_DEGREE = 20

MultiIndex = Tuple[int, ...]


class SymbolError(ValueError):
    pass


def multi_order(mi: MultiIndex) -> int:
    return int(sum(mi))


def multi_factorial(mi: MultiIndex) -> int:
    return math.prod(math.factorial(int(k)) for k in mi)


def multi_power(z: np.ndarray, mi: MultiIndex) -> complex:
    out = 1.0 + 0.0j
    for zk, ek in zip(z, mi):
        if ek:
            out *= zk ** ek
    return out


def _as_index(mi, modes: int) -> MultiIndex:
    t = tuple(int(k) for k in mi)
    if len(t) != modes:
        raise SymbolError(f"multi-index {t} has length {len(t)}, expected {modes}")
    if any(k < 0 for k in t):
        raise SymbolError(f"multi-index {t} has negative entries")
    if multi_order(t) > MAX_DEGREE:
        raise SymbolError(f"multi-index order {multi_order(t)} exceeds cap {MAX_DEGREE}")
    return t


class WickSymbol:
    """Immutable polynomial in (zstar, z) with complex coefficients.

    Stored in canonical form: zero coefficients are dropped and iteration
    order is the lexicographic order of (l, s), so serial results are
    bitwise reproducible.
    """

    __slots__ = ("modes", "_terms", "_key")

    def __init__(self, modes: int, terms: Mapping[tuple, complex] | Iterable[tuple] = ()):
        if modes < 1:
            raise SymbolError("modes must be a positive integer")
        self.modes = int(modes)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple, complex] = {}
        for (lstar, s), coeff in items:
            key = (_as_index(lstar, modes), _as_index(s, modes))
            acc[key] = acc.get(key, 0j) + complex(coeff)
        self._terms = {k: v for k, v in sorted(acc.items()) if v != 0}
        self._key = tuple(self._terms.items())

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def __eq__(self, other):
        return isinstance(other, WickSymbol) and self.modes == other.modes and self._key == other._key

    def __hash__(self):
        return hash((self.modes, self._key))

    def __repr__(self):
        body = " + ".join(f"({c})*zstar^{l}*z^{s}" for (l, s), c in self._terms.items())
        return f"WickSymbol(modes={self.modes}, {body or '0'})"

    def with_term(self, lstar, s, coeff) -> "WickSymbol":
        """Return a new symbol with coeff added to the (lstar, s) term."""
        return WickSymbol(self.modes, list(self._terms.items()) + [((tuple(lstar), tuple(s)), coeff)])

    def evaluate(self, zstar, z) -> complex:
        zstar = np.asarray(zstar, dtype=complex).reshape(-1)
        z = np.asarray(z, dtype=complex).reshape(-1)
        if len(zstar) != self.modes or len(z) != self.modes:
            raise SymbolError(
                f"argument lengths ({len(zstar)}, {len(z)}) do not match modes {self.modes}")
        out = 0j
        for (l, s), c in self._terms.items():
            out += c * multi_power(zstar, l) * multi_power(z, s)
        return out

    def derivative(self, slot: str, mode: int) -> "WickSymbol":
        """Formal partial derivative d/dzstar_k (slot='star') or d/dz_k (slot='plain')."""
        if slot not in ("star", "plain"):
            raise SymbolError(f"slot must be 'star' or 'plain', got {slot!r}")
        if not 0 <= mode < self.modes:
            raise SymbolError(f"mode {mode} out of range for {self.modes} modes")
        new = []
        for (l, s), c in self._terms.items():
            src = l if slot == "star" else s
            e = src[mode]
            if e == 0:
                continue
            dropped = src[:mode] + (e - 1,) + src[mode + 1:]
            key = (dropped, s) if slot == "star" else (l, dropped)
            new.append((key, c * e))
        return WickSymbol(self.modes, new)

    def is_hermitian(self) -> bool:
        """Exact coefficient check of c(l,s) == conj(c(s,l))."""
        for (l, s), c in self._terms.items():
            if self._terms.get((s, l)) != np.conj(c):
                return False
        return True

    def symmetrized(self) -> "WickSymbol":
        """Hermitian part: average c(l,s) with conj(c(s,l))."""
        new = []
        for (l, s), c in self._terms.items():
            partner = self._terms.get((s, l), 0j)
            new.append(((l, s), 0.5 * (c + np.conj(partner))))
            if (s, l) not in self._terms:
                new.append(((s, l), 0.5 * np.conj(c)))
        return WickSymbol(self.modes, new)

    def max_degree(self, slot: str) -> MultiIndex:
        """Componentwise maximum exponent over terms in the given slot."""
        out = [0] * self.modes
        for (l, s), _ in self._terms.items():
            src = l if slot == "star" else s
            for k, e in enumerate(src):
                out[k] = max(out[k], e)
        return tuple(out)

    # -- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "modes": self.modes,
            "terms": [
                {"lstar": list(l), "s": list(s), "re": float(c.real), "im": float(c.imag)}
                for (l, s), c in self._terms.items()
            ],
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "WickSymbol":
        if "preset" in doc:
            return symbol_preset(doc)
        modes = doc["modes"]
        terms = [((tuple(t["lstar"]), tuple(t["s"])), complex(t.get("re", 0.0), t.get("im", 0.0)))
                 for t in doc["terms"]]
        return WickSymbol(modes, terms)


# -- presets -------------------------------------------------------------

def harmonic(omega: float) -> WickSymbol:
    return WickSymbol(1, {((1,), (1,)): omega})


def kerr(omega: float, mu: float) -> WickSymbol:
    return WickSymbol(1, {((1,), (1,)): omega, ((2,), (2,)): mu})


def cross_kerr(omega1: float, omega2: float, mu12: float) -> WickSymbol:
    return WickSymbol(2, {
        ((1, 0), (1, 0)): omega1,
        ((0, 1), (0, 1)): omega2,
        ((1, 1), (1, 1)): mu12,
    })


def beam_splitter(omega1: float, omega2: float, g: float) -> WickSymbol:
    return WickSymbol(2, {
        ((1, 0), (1, 0)): omega1,
        ((0, 1), (0, 1)): omega2,
        ((1, 0), (0, 1)): g,
        ((0, 1), (1, 0)): g,
    })


_PRESETS = {
    "harmonic": (harmonic, ("omega",)),
    "kerr": (kerr, ("omega", "mu")),
    "cross_kerr": (cross_kerr, ("omega1", "omega2", "mu12")),
    "beam_splitter": (beam_splitter, ("omega1", "omega2", "g")),
}


def symbol_preset(doc: dict) -> WickSymbol:
    name = doc["preset"]
    if name not in _PRESETS:
        raise SymbolError(f"unknown preset {name!r}; known: {sorted(_PRESETS)}")
    fn, params = _PRESETS[name]
    try:
        return fn(*(float(doc[p]) for p in params))
    except KeyError as exc:
        raise SymbolError(f"preset {name!r} requires parameters {params}") from exc


# -- derived scalar quantities ------------------------------------------

def effective_hamiltonian(sym: WickSymbol, alpha, p) -> complex:
    """W = -i{ H(alpha*, alpha + p*) - H(alpha* + p, alpha) }.

    Real on conjugate-consistent data for hermitian symbols; generates the
    characteristic flow in the doubled phase space.
    """
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    p = np.asarray(p, dtype=complex).reshape(-1)
    astar, pstar = np.conj(alpha), np.conj(p)
    return -1j * (sym.evaluate(astar, alpha + pstar) - sym.evaluate(astar + p, alpha))


def lagrangian(sym: WickSymbol, alpha, p) -> complex:
    """Action integrand i{ p.dH/da*(a*+p, a) - p*.dH/da(a*, a+p*) - H(a*+p, a) + H(a*, a+p*) }."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    p = np.asarray(p, dtype=complex).reshape(-1)
    astar, pstar = np.conj(alpha), np.conj(p)
    n = sym.modes
    grad_star = np.array([sym.derivative("star", k).evaluate(astar + p, alpha) for k in range(n)])
    grad_plain = np.array([sym.derivative("plain", k).evaluate(astar, alpha + pstar) for k in range(n)])
    return 1j * (p @ grad_star - pstar @ grad_plain
                 - sym.evaluate(astar + p, alpha) + sym.evaluate(astar, alpha + pstar))
