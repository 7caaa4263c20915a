"""Eisenstein series atoms for Gamma0(N) with trivial nebentypus.

The weight-k Eisenstein space is spanned by dilations of character-twisted
series: for a primitive character phi mod u and a dilation t with t*u^2 | N,
the atom is E_k^phi(t tau) where

    E_k^phi = [phi trivial] * zeta(1-k)  +  2 * sum_n sigma_phi(n) q^n,
    sigma_phi(n) = sum_{d|n} phi(d) conj(phi)(n/d) d^(k-1).

Weight 2 is special: the trivial-character dilation pairs enter as the
modular combinations E2(tau) - t E2(t tau) for t > 1, and the bare
quasimodular E2 is kept as a separate atom for graded assemblies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .characters import DirichletCharacter, enumerate_primitive, trivial_character
from .exact import CycNumber, divisors, zeta_at_negative
from .qseries import QSeries

__all__ = [
    "EisensteinAtom",
    "e2_series",
    "eisenstein_basis",
    "eisenstein_expand",
    "enumerate_A",
    "raw_e2_atom",
    "sigma_phi",
]


def sigma_phi(chi: DirichletCharacter, power: int, n: int) -> CycNumber:
    """Twisted divisor sum: sum over d | n of chi(d) conj(chi)(n/d) d^power."""
    if n < 1:
        raise ValueError("divisor sums need n >= 1")
    inv = chi.inverse()
    acc = CycNumber.zero()
    for d in divisors(n):
        a = chi(d)
        if a.is_zero():
            continue
        b = inv(n // d)
        if b.is_zero():
            continue
        acc = acc + a * b * d**power
    return acc


def _sigma_phi_prefix(chi: DirichletCharacter, power: int, precision: int) -> list[CycNumber]:
    """sigma_phi(n) for 0 < n < precision by a divisor sieve."""
    out = [CycNumber.zero() for _ in range(precision)]
    inv = chi.inverse()
    chi_vals = [chi(r) for r in range(chi.modulus)] if chi.modulus > 1 else [chi(0)]
    inv_vals = [inv(r) for r in range(chi.modulus)] if chi.modulus > 1 else [inv(0)]
    u = chi.modulus
    for d in range(1, precision):
        a = chi_vals[d % u] if u > 1 else chi_vals[0]
        if a.is_zero():
            continue
        w = a * d**power
        for m in range(1, (precision - 1) // d + 1):
            b = inv_vals[m % u] if u > 1 else inv_vals[0]
            if not b.is_zero():
                out[d * m] = out[d * m] + w * b
    return out


@lru_cache(maxsize=None)
def e2_series(precision: int) -> QSeries:
    """The quasimodular E2 = 1 - 24 sum sigma_1(n) q^n."""
    coeffs = [0] * precision
    coeffs[0] = 1
    for d in range(1, precision):
        for n in range(d, precision, d):
            coeffs[n] -= 24 * d
    return QSeries([Fraction(c) for c in coeffs], precision)


@dataclass(frozen=True)
class EisensteinAtom:
    """One spanning series of the weight-k Eisenstein space (or bare E2)."""

    weight: int
    chi: DirichletCharacter | None  # None marks the bare quasimodular E2
    t: int

    def __post_init__(self):
        if self.weight < 2 or self.weight % 2:
            raise ValueError("atoms have even weight >= 2")
        if self.chi is None and (self.weight != 2 or self.t != 1):
            raise ValueError("bare E2 is the weight-2, t=1 atom")

    @property
    def is_raw_e2(self) -> bool:
        return self.chi is None

    @property
    def kind(self) -> str:
        if self.chi is None:
            return "raw_e2"
        if self.weight > 2:
            return "classical"
        return "weight2_trivial" if self.chi.is_trivial() else "weight2_twisted"

    def expand(self, precision: int) -> QSeries:
        return _expand_atom(self, precision)

    def prime_coefficient(self, p: int) -> CycNumber:
        """Exact q^p coefficient at a prime p from the closed formulas:
        -24(1+p) for E2 and its weight-2 combinations away from t, and
        2(conj(chi)(p) + chi(p) p^(k-1)) for undilated character atoms.
        Dilated character atoms vanish at every prime other than t."""
        if self.chi is None or (self.weight == 2 and self.chi.is_trivial()):
            if self.t > 1 and p % self.t == 0:
                # t divides the prime p, so t = p; the dilated term kicks in
                return CycNumber.from_rational(-24)
            return CycNumber.from_rational(-24 * (1 + p))
        if self.t > 1:
            if p == self.t:
                return CycNumber.from_rational(2)
            return CycNumber.zero()
        chi = self.chi
        return 2 * (chi.inverse()(p) + chi(p) * p ** (self.weight - 1))

    def spec_text(self) -> str:
        if self.chi is None:
            return "E2"
        if self.weight == 2 and self.chi.is_trivial():
            return f"E2twist[{self.t}]"
        u = self.chi.modulus
        j = 1 + [c.exponents for c in enumerate_primitive(u)].index(self.chi.exponents)
        return f"E[{self.weight},{u}.{j},{self.t}]"

    def sort_key(self) -> tuple:
        chi_key = self.chi.sort_key() if self.chi else (-1,)
        return (self.weight, self.chi is None, chi_key, self.t)

    def __repr__(self) -> str:
        return f"EisensteinAtom({self.spec_text()})"


@lru_cache(maxsize=None)
def _expand_atom(atom: EisensteinAtom, precision: int) -> QSeries:
    if atom.chi is None:
        return e2_series(precision)
    k, chi, t = atom.weight, atom.chi, atom.t
    if k == 2 and chi.is_trivial():
        e2 = e2_series(precision)
        return e2 - e2.dilate(t, precision).scale(t)
    base_len = (precision - 1) // t + 1
    sig = _sigma_phi_prefix(chi, k - 1, base_len)
    coeffs: list[CycNumber] = [CycNumber.zero() for _ in range(precision)]
    if chi.modulus == 1:
        coeffs[0] = CycNumber.from_rational(zeta_at_negative(k))
    for n in range(1, base_len):
        coeffs[n * t] = 2 * sig[n]
    return QSeries(coeffs, precision)


def eisenstein_expand(
    k: int, chi: DirichletCharacter, t: int, precision: int
) -> QSeries:
    """Expansion of the (k, phi, t) atom to the requested precision."""
    return EisensteinAtom(k, chi, t).expand(precision)


def enumerate_A(N: int, k: int) -> list[tuple[DirichletCharacter, int]]:
    """Admissible (character, dilation) pairs at level N and weight k.

    Pairs (phi primitive mod u, t) with t u^2 | N, ordered by u, character
    index, t.  At weight 2 the trivial pair (1, 1) is excluded: its series
    is identically zero as a modular combination.
    """
    if N < 1:
        raise ValueError("level must be positive")
    if k < 2 or k % 2:
        raise ValueError("weight must be even and at least 2")
    out: list[tuple[DirichletCharacter, int]] = []
    for u in range(1, N + 1):
        if u * u > N or N % (u * u):
            continue
        prims = enumerate_primitive(u)
        if not prims:
            continue
        ts = divisors(N // (u * u))
        for chi in prims:
            for t in ts:
                if k == 2 and u == 1 and t == 1:
                    continue
                out.append((chi, t))
    return out


def eisenstein_basis(N: int, k: int) -> list[EisensteinAtom]:
    """Atoms spanning the weight-k Eisenstein space of Gamma0(N)."""
    return [EisensteinAtom(k, chi, t) for chi, t in enumerate_A(N, k)]


def raw_e2_atom() -> EisensteinAtom:
    return EisensteinAtom(2, None, 1)


def ambient_conductor(N: int) -> int:
    """Least conductor containing every character value used at level N."""
    M = 1
    for u in range(1, N + 1):
        if u * u <= N and N % (u * u) == 0:
            for chi in enumerate_primitive(u):
                M = math.lcm(M, chi.order)
    return M
