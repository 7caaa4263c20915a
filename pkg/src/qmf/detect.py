"""MacMahon partition tables, prime-detecting combinations, and censuses.

The table side computes M_a(n), the weighted count of chains
0 < s_1 < ... < s_a with multiplicities, whose generating series U_a(q)
stacks factors q^s/(1-q^s)^2.  The series side builds the restricted
divisor sums G_k^{(N)} and their D-combinations f_{k,l}^{(N)}, checks the
prime-detecting property coefficient by coefficient, and runs exhaustive
prime-vanishing censuses with an informational density bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .exact import factorize, primes_upto
from .qseries import QSeries
from .quasimodular import InsufficientPrecisionError

__all__ = [
    "CensusReport",
    "DetectReport",
    "MacMahonTable",
    "PrimeTestResult",
    "census",
    "f_kl",
    "g_series",
    "macmahon",
    "macmahon_prime_test",
    "prime_detect_verdict",
]


@dataclass(frozen=True)
class MacMahonTable:
    """Exact values M_a(n) for 0 <= n < precision."""

    a: int
    precision: int
    values: tuple[int, ...]

    def value(self, n: int) -> int:
        if not 0 <= n < self.precision:
            raise IndexError(f"M_{self.a}({n}) is beyond this table")
        return self.values[n]

    def series(self) -> QSeries:
        return QSeries(self.values, self.precision)


def macmahon(a: int, precision: int) -> MacMahonTable:
    """Tabulate M_a(n) for n < precision by dynamic programming.

    Sweeping the largest allowed part s upward, B_j accumulates
    B_{j-1} * q^s/(1-q^s)^2 with j descending so that B_{j-1} still only
    uses parts below s.  The squared denominator is two stride-s partial
    sum passes.
    """
    if a < 1:
        raise ValueError("chain length a must be positive")
    if precision < 2:
        raise ValueError("need precision at least 2")
    P = precision
    rows = [[0] * P for _ in range(a + 1)]
    rows[0][0] = 1
    for s in range(1, P):
        for j in range(a, 1, -1):
            src = rows[j - 1]
            start = (j - 1) * j // 2  # smallest sum a (j-1)-chain can reach
            if start + s >= P:
                continue
            tmp = src.copy()
            for n in range(max(s, start), P):
                tmp[n] += tmp[n - s]
            for n in range(max(s, start), P):
                tmp[n] += tmp[n - s]
            dst = rows[j]
            for n in range(start + s, P):
                dst[n] += tmp[n - s]
        # j = 1 reads the untouched delta at 0: its image is just T_s
        dst = rows[1]
        for m in range(1, (P - 1) // s + 1):
            dst[s * m] += m
    vals = rows[a]
    floor = min(a * (a + 1) // 2, P)
    assert not any(vals[:floor]), "chain sum below the minimal triangle"
    assert min(vals) >= 0
    return MacMahonTable(a, P, tuple(vals))


@dataclass(frozen=True)
class PrimeTestResult:
    n: int
    value: int

    @property
    def prime(self) -> bool:
        return self.value == 0

    def report_text(self) -> str:
        verdict = "prime" if self.prime else "composite"
        return f"n={self.n} value={self.value} verdict={verdict}"


def macmahon_prime_test(
    n: int,
    m1: MacMahonTable | None = None,
    m2: MacMahonTable | None = None,
) -> PrimeTestResult:
    """Evaluate (n^2-3n+2) M_1(n) - 8 M_2(n); zero claims n is prime.

    Tables may be supplied to amortize the tabulation over many n.
    """
    if n < 2:
        raise ValueError("the prime test needs n >= 2")
    if m1 is None:
        m1 = macmahon(1, n + 1)
    if m2 is None:
        m2 = macmahon(2, n + 1)
    if m1.a != 1 or m2.a != 2:
        raise ValueError("tables must be M_1 and M_2")
    value = (n * n - 3 * n + 2) * m1.value(n) - 8 * m2.value(n)
    return PrimeTestResult(n, value)


def g_series(k: int, N: int, precision: int) -> QSeries:
    """Sum over n of (sum of d^(k-1) for d | n with gcd(n/d, N) = 1) q^n."""
    if k < 2 or k % 2:
        raise ValueError("weight k must be even and at least 2")
    if N < 1:
        raise ValueError("level must be positive")
    P = precision
    coeffs = [0] * P
    for d in range(1, P):
        dk = d ** (k - 1)
        for n in range(d, P, d):
            if math.gcd(n // d, N) == 1:
                coeffs[n] += dk
    return QSeries(coeffs, P)


def f_kl(k: int, l: int, N: int, precision: int) -> QSeries:
    """The weight-(l+2) combination (D^l + 1)G_{k+1} - (D^k + 1)G_{l+1}."""
    if k < 1 or k % 2 == 0 or l % 2 == 0:
        raise ValueError("k and l must be positive odd integers")
    if l <= k:
        raise ValueError("need l > k")
    gk = g_series(k + 1, N, precision)
    gl = g_series(l + 1, N, precision)
    return (gk.apply_D(l) + gk) - (gl.apply_D(k) + gl)


@dataclass
class DetectReport:
    """Both directions of the prime-detecting check up to a bound."""

    level: int
    bound: int
    vanishing_failures: list[int]
    nonvanishing_failures: list[int]

    @property
    def ok(self) -> bool:
        return not self.vanishing_failures and not self.nonvanishing_failures

    def report_text(self) -> str:
        if self.ok:
            return f"prime-detecting (n <= {self.bound}, level {self.level})"
        lines = [f"not prime-detecting (n <= {self.bound}, level {self.level})"]
        if self.vanishing_failures:
            shown = " ".join(str(p) for p in self.vanishing_failures[:20])
            lines.append(
                f"nonzero at {len(self.vanishing_failures)} primes coprime "
                f"to the level: {shown}"
            )
        if self.nonvanishing_failures:
            shown = " ".join(str(n) for n in self.nonvanishing_failures[:20])
            lines.append(
                f"zero at {len(self.nonvanishing_failures)} indices that are "
                f"composite or divide the level: {shown}"
            )
        return "\n".join(lines)


def prime_detect_verdict(f: QSeries, N: int, X: int) -> DetectReport:
    """Is a_f(n) = 0 exactly at the primes not dividing N, for 2 <= n <= X?"""
    if f.precision <= X:
        raise InsufficientPrecisionError(X + 1, f.precision, "input series")
    prime_set = set(primes_upto(X))
    vanishing = []
    nonvanishing = []
    for n in range(2, X + 1):
        zero = f.coefficient(n).is_zero()
        if n in prime_set and N % n:
            if not zero:
                vanishing.append(n)
        elif zero:
            nonvanishing.append(n)
    return DetectReport(N, X, vanishing, nonvanishing)


@dataclass
class CensusReport:
    """Exhaustive tally of vanishing prime coefficients up to X.

    The density bound X/log X / eps(X)^delta is informational; delta is a
    report parameter, nothing asserts the bound.  hypothesis_met records
    whether some a(p) with p coprime to the level was nonzero, the
    nonvanishing hypothesis behind the density statement.
    """

    x: int
    level: int
    delta_text: str
    zero_primes: list[int]
    nonzero_count: int
    eligible_count: int
    epsilon_value: float
    bound_value: float

    @property
    def zero_count(self) -> int:
        return len(self.zero_primes)

    @property
    def nonzero_density(self) -> Fraction:
        return Fraction(self.nonzero_count, self.eligible_count)

    @property
    def hypothesis_met(self) -> bool:
        return self.nonzero_count > 0

    def report_text(self) -> str:
        lines = [
            f"X={self.x} N={self.level} delta={self.delta_text}",
            f"zeros: {self.zero_count}",
        ]
        shown = self.zero_primes[:100]
        line = "zero_list:"
        if shown:
            line += " " + " ".join(str(p) for p in shown)
        if self.zero_count > 100:
            line += f" ... (+{self.zero_count - 100} more)"
        lines.append(line)
        lines.append(f"nonzero_density: {self.nonzero_density}")
        lines.append(f"bound: {self.bound_value:.6f}")
        if not self.hypothesis_met:
            lines.append(
                "note: nonvanishing hypothesis unmet; a(p) = 0 at every "
                "prime p <= X coprime to the level"
            )
        return "\n".join(lines)


def epsilon_bound(X: int) -> float:
    """(log X)(log log X)^-2 (log log log X)^-1, defined once X >= 100."""
    if X < 100:
        raise ValueError("X must be at least 100")
    lx = math.log(X)
    llx = math.log(lx)
    lllx = math.log(llx)
    return lx / (llx * llx * lllx)


def census(f: QSeries, N: int, X: int, delta) -> CensusReport:
    """Count primes p <= X, p coprime to N, with a_f(p) = 0, exactly."""
    if X < 100:
        raise ValueError("census bound X must be at least 100")
    if f.precision <= X:
        raise InsufficientPrecisionError(X + 1, f.precision, "input series")
    delta_fraction = Fraction(str(delta))
    if delta_fraction <= 0:
        raise ValueError("delta must be positive")
    level_primes = {p for p in factorize(N)}
    zero_primes = []
    nonzero = 0
    eligible = 0
    for p in primes_upto(X):
        if p in level_primes:
            continue
        eligible += 1
        if f.coefficient(p).is_zero():
            zero_primes.append(p)
        else:
            nonzero += 1
    eps = epsilon_bound(X)
    bound = (X / math.log(X)) / (eps ** float(delta_fraction))
    return CensusReport(
        X, N, str(delta), zero_primes, nonzero, eligible, eps, bound
    )
