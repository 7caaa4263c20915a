"""Exact scalar arithmetic over cyclotomic fields.

Every coefficient in this package is an element of some Q(zeta_M), stored on
the power basis 1, zeta, ..., zeta^(phi(M)-1) with Fraction coordinates and
reduced modulo the M-th cyclotomic polynomial.  M = 1 gives plain rationals
and is the fast path almost everywhere.  No floating point enters any
computation; floats appear only in human-readable reports.
"""
from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Iterable, Iterator

__all__ = [
    "ConductorMismatchError",
    "CycNumber",
    "bernoulli",
    "cyc_embed",
    "cyclotomic_polynomial",
    "divisors",
    "euler_phi",
    "factorize",
    "is_prime",
    "moebius",
    "primes_upto",
    "zeta_at_negative",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class ConductorMismatchError(ValueError):
    """Raised when an element of Q(zeta_M) is asked to live in a field
    that does not contain it (target conductor not a multiple of M)."""


# ---------------------------------------------------------------------------
# elementary number theory helpers

def factorize(n: int) -> dict[int, int]:
    """Prime factorization as {prime: exponent}; n must be >= 1."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    """Sorted list of positive divisors of n."""
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def euler_phi(n: int) -> int:
    out = n
    for p in factorize(n):
        out = out // p * (p - 1)
    return out


def moebius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def primes_upto(x: int) -> list[int]:
    """All primes p <= x by sieve."""
    if x < 2:
        return []
    sieve = bytearray([1]) * (x + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(x) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i in range(2, x + 1) if sieve[i]]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# ---------------------------------------------------------------------------
# cyclotomic polynomials

_CYC_POLY_CACHE: dict[int, tuple[int, ...]] = {}
_CYC_POLY_LOCK = threading.Lock()


def _poly_divide_exact(num: list[int], den: tuple[int, ...]) -> list[int]:
    # Exact division of integer polynomials, low-degree-first coefficients.
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    lead = den[-1]
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1]
        if c % lead:
            raise ArithmeticError("inexact polynomial division")
        q = c // lead
        out[i] = q
        if q:
            for j, dj in enumerate(den):
                num[i + j] -= q * dj
    if any(num[: len(den) - 1]):
        raise ArithmeticError("nonzero remainder in polynomial division")
    return out


def cyclotomic_polynomial(M: int) -> tuple[int, ...]:
    """Coefficients of the M-th cyclotomic polynomial, low degree first.

    Computed by dividing z^M - 1 by the product of the lower cyclotomic
    polynomials for proper divisors of M; results are cached and safe for
    concurrent readers.
    """
    if M < 1:
        raise ValueError("conductor must be positive")
    got = _CYC_POLY_CACHE.get(M)
    if got is not None:
        return got
    with _CYC_POLY_LOCK:
        got = _CYC_POLY_CACHE.get(M)
        if got is not None:
            return got
        num = [0] * (M + 1)
        num[0], num[M] = -1, 1
        for d in divisors(M)[:-1]:
            # recursion depth is the divisor chain length; fine at desk scale
            num = _poly_divide_exact(num, _cyc_poly_unlocked(d))
        poly = tuple(num)
        _CYC_POLY_CACHE[M] = poly
        return poly


def _cyc_poly_unlocked(M: int) -> tuple[int, ...]:
    got = _CYC_POLY_CACHE.get(M)
    if got is not None:
        return got
    num = [0] * (M + 1)
    num[0], num[M] = -1, 1
    for d in divisors(M)[:-1]:
        num = _poly_divide_exact(num, _cyc_poly_unlocked(d))
    poly = tuple(num)
    _CYC_POLY_CACHE[M] = poly
    return poly


# ---------------------------------------------------------------------------
# cyclotomic field elements

def _reduce_mod_cyclotomic(coeffs: list[Fraction], M: int) -> list[Fraction]:
    """Reduce a polynomial in zeta_M (low degree first) to the power basis."""
    phi = cyclotomic_polynomial(M)
    deg = len(phi) - 1
    coeffs = list(coeffs)
    for i in range(len(coeffs) - 1, deg - 1, -1):
        c = coeffs[i]
        if c:
            # phi is monic: z^deg = -(phi[0] + ... + phi[deg-1] z^(deg-1))
            for j in range(deg):
                if phi[j]:
                    coeffs[i - deg + j] -= c * phi[j]
        coeffs.pop()
    coeffs.extend([_ZERO] * (deg - len(coeffs)))
    return coeffs


class CycNumber:
    """An element of Q(zeta_M), immutable.

    coords has length phi(M) and holds power-basis coordinates.  Arithmetic
    between different conductors embeds both operands into Q(zeta_lcm).
    Equality is mathematical (embedding-aware); instances are not hashable.
    """

    __slots__ = ("conductor", "coords")

    def __init__(self, conductor: int, coords: Iterable[Fraction | int]):
        coords = tuple(Fraction(c) for c in coords)
        if conductor < 1:
            raise ValueError("conductor must be positive")
        if len(coords) != euler_phi(conductor):
            raise ValueError(
                f"need {euler_phi(conductor)} coordinates for conductor {conductor}, got {len(coords)}"
            )
        object.__setattr__(self, "conductor", conductor)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("CycNumber is immutable")

    # -- constructors -----------------------------------------------------
    @staticmethod
    def from_rational(value: Fraction | int) -> "CycNumber":
        return CycNumber(1, (Fraction(value),))

    @staticmethod
    def zero(conductor: int = 1) -> "CycNumber":
        return CycNumber(conductor, [_ZERO] * euler_phi(conductor))

    @staticmethod
    def one(conductor: int = 1) -> "CycNumber":
        c = [_ZERO] * euler_phi(conductor)
        c[0] = _ONE
        return CycNumber(conductor, c)

    @staticmethod
    def root_of_unity(M: int, exponent: int = 1) -> "CycNumber":
        """zeta_M^exponent.  Conductor 2 collapses to the rational -1."""
        exponent %= M
        if M <= 2:
            return CycNumber.from_rational(1 if M == 1 or exponent == 0 else -1)
        raw = [_ZERO] * (exponent + 1)
        raw[exponent] = _ONE
        return CycNumber(M, _reduce_mod_cyclotomic(raw, M))

    # -- basic predicates -------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.coords)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_rational(self) -> bool:
        return self.conductor == 1 or not any(self.coords[1:])

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coords[0]

    # -- embeddings -------------------------------------------------------
    def embed(self, target: int) -> "CycNumber":
        """Image under Q(zeta_M) -> Q(zeta_target), zeta_M -> zeta_target^(target/M)."""
        if target == self.conductor:
            return self
        if target % self.conductor:
            raise ConductorMismatchError(
                f"cannot embed conductor {self.conductor} into {target}"
            )
        if self.conductor == 1:
            raw = [self.coords[0]]
        else:
            step = target // self.conductor
            raw = [_ZERO] * ((len(self.coords) - 1) * step + 1)
            for i, c in enumerate(self.coords):
                if c:
                    raw[i * step] = c
        return CycNumber(target, _reduce_mod_cyclotomic(raw, target))

    # -- arithmetic -------------------------------------------------------
    def _pair(self, other) -> tuple["CycNumber", "CycNumber"] | None:
        if isinstance(other, (int, Fraction)):
            other = CycNumber.from_rational(other)
        elif not isinstance(other, CycNumber):
            return None
        if self.conductor == other.conductor:
            return self, other
        M = math.lcm(self.conductor, other.conductor)
        return self.embed(M), other.embed(M)

    def __add__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return CycNumber(a.conductor, [x + y for x, y in zip(a.coords, b.coords)])

    __radd__ = __add__

    def __neg__(self):
        return CycNumber(self.conductor, [-c for c in self.coords])

    def __sub__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return CycNumber(a.conductor, [x - y for x, y in zip(a.coords, b.coords)])

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycNumber(self.conductor, [c * other for c in self.coords])
        if not isinstance(other, CycNumber):
            return NotImplemented
        a, b = self._pair(other)
        if a.conductor == 1:
            return CycNumber(1, (a.coords[0] * b.coords[0],))
        xs, ys = a.coords, b.coords
        raw = [_ZERO] * (len(xs) + len(ys) - 1)
        for i, x in enumerate(xs):
            if x:
                for j, y in enumerate(ys):
                    if y:
                        raw[i + j] += x * y
        return CycNumber(a.conductor, _reduce_mod_cyclotomic(raw, a.conductor))

    __rmul__ = __mul__

    def inverse(self) -> "CycNumber":
        """Multiplicative inverse via the extended Euclidean algorithm on
        the power-basis polynomial and the cyclotomic polynomial."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero cyclotomic number")
        if self.conductor == 1:
            return CycNumber(1, (1 / self.coords[0],))
        phi = [Fraction(c) for c in cyclotomic_polynomial(self.conductor)]
        r0, r1 = phi, list(self.coords)
        s0, s1 = [_ZERO], [_ONE]
        while any(r1):
            q, rem = _poly_divmod(r0, r1)
            r0, r1 = r1, rem
            s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
        # r0 is a nonzero constant multiple of gcd = 1
        lead = next(c for c in r0 if c)
        inv = [c / lead for c in s0]
        return CycNumber(self.conductor, _reduce_mod_cyclotomic(inv, self.conductor))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycNumber(self.conductor, [c / other for c in self.coords])
        if not isinstance(other, CycNumber):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = CycNumber.one(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparison and display -------------------------------------------
    def __eq__(self, other) -> bool:
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return a.coords == b.coords

    __hash__ = None  # mathematical equality across conductors; keep unhashable

    def sort_key(self) -> tuple:
        """Deterministic total order key (conductor, then coordinates)."""
        return (self.conductor, self.coords)

    def __repr__(self) -> str:
        if self.is_rational():
            return f"CycNumber({self.coords[0]})"
        return f"CycNumber(M={self.conductor}, {format_cyc(self)})"


def _poly_divmod(a: list[Fraction], b: list[Fraction]):
    a = list(a)
    db = max(i for i, c in enumerate(b) if c)
    lead = b[db]
    q = [_ZERO] * max(len(a) - db, 1)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i]
        if c:
            f = c / lead
            q[i - db] = f
            for j in range(db + 1):
                if b[j]:
                    a[i - db + j] -= f * b[j]
    return q, a[:db] if db else [_ZERO]


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [_ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _poly_sub(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    n = max(len(a), len(b))
    a = a + [_ZERO] * (n - len(a))
    b = b + [_ZERO] * (n - len(b))
    return [x - y for x, y in zip(a, b)]


def cyc_embed(x: CycNumber, target_conductor: int) -> CycNumber:
    """Functional form of CycNumber.embed."""
    return x.embed(target_conductor)


def format_cyc(x: CycNumber) -> str:
    """Space-separated power-basis coordinates, each as p or p/q."""
    return " ".join(str(c) for c in x.coords)


def parse_cyc(text: str, conductor: int) -> CycNumber:
    return CycNumber(conductor, [Fraction(tok) for tok in text.split()])


# ---------------------------------------------------------------------------
# Bernoulli numbers

_BERNOULLI_CACHE: dict[int, Fraction] = {0: _ONE, 1: Fraction(-1, 2)}
_BERNOULLI_LOCK = threading.Lock()


def bernoulli(k: int) -> Fraction:
    """k-th Bernoulli number for even k >= 2 (convention B_1 = -1/2).

    Uses the recurrence sum_{j=0}^{m} C(m+1, j) B_j = 0 and caches all
    intermediate values; safe for concurrent readers.
    """
    if k < 2 or k % 2:
        raise ValueError("bernoulli is defined here for even k >= 2")
    got = _BERNOULLI_CACHE.get(k)
    if got is not None:
        return got
    with _BERNOULLI_LOCK:
        top = max(_BERNOULLI_CACHE)
        for m in range(top + 1, k + 1):
            if m % 2 and m > 1:
                _BERNOULLI_CACHE[m] = _ZERO
                continue
            acc = sum(
                (Fraction(math.comb(m + 1, j)) * _BERNOULLI_CACHE[j] for j in range(m)),
                _ZERO,
            )
            _BERNOULLI_CACHE[m] = -acc / (m + 1)
        return _BERNOULLI_CACHE[k]


def zeta_at_negative(k: int) -> Fraction:
    """zeta(1 - k) = -B_k / k for even k >= 2."""
    return -bernoulli(k) / k


# ---------------------------------------------------------------------------
# exact linear solving over Q(zeta_M)

class LinearSolver:
    """Reduced-row-echelon factorization of an exact matrix, reusable for
    many right-hand sides.

    Rows are indexed by q-exponent; pivoting picks, for each column, the
    first unused row (lowest exponent) with a nonzero entry.  solve() replays
    the recorded row operations on the target vector, returns coordinates
    when consistent and None when the target is outside the column span.
    """

    def __init__(self, rows: list[list[CycNumber]]):
        self.nrows = len(rows)
        self.ncols = len(rows[0]) if rows else 0
        self._rational = all(c.conductor == 1 for row in rows for c in row)
        if self._rational:
            work = [[c.coords[0] for c in row] for row in rows]
        else:
            conductor = 1
            for row in rows:
                for c in row:
                    conductor = math.lcm(conductor, c.conductor)
            work = [[c.embed(conductor) for c in row] for row in rows]
            self._conductor = conductor
        # ops: ("scale", row, factor) and ("axpy", dst, factor, src)
        self._ops: list[tuple] = []
        self._pivot_rows: list[int] = []
        self._pivot_cols: list[int] = []
        used = [False] * self.nrows
        for col in range(self.ncols):
            pr = None
            for i in range(self.nrows):
                if not used[i] and work[i][col]:
                    pr = i
                    break
            if pr is None:
                continue
            used[pr] = True
            self._pivot_rows.append(pr)
            self._pivot_cols.append(col)
            inv = (1 / work[pr][col]) if self._rational else work[pr][col].inverse()
            self._ops.append(("scale", pr, inv))
            work[pr] = [c * inv for c in work[pr]]
            for i in range(self.nrows):
                f = work[i][col]
                if i != pr and f:
                    self._ops.append(("axpy", i, f, pr))
                    prow = work[pr]
                    work[i] = [a - f * b for a, b in zip(work[i], prow)]
        self.rank = len(self._pivot_rows)
        self._nonpivot_rows = [i for i in range(self.nrows) if not used[i]]

    def solve(self, target: list[CycNumber]) -> list[CycNumber] | None:
        if len(target) != self.nrows:
            raise ValueError("target length does not match row count")
        plain = self._rational and all(c.conductor == 1 for c in target)
        if plain:
            vec: list = [c.coords[0] for c in target]
        elif self._rational:
            # rational elimination steps stay valid over the extension field,
            # so a cyclotomic target just replays them in CycNumber arithmetic
            vec = list(target)
        else:
            vec = [c.embed(self._conductor) for c in target]
        for op in self._ops:
            if op[0] == "scale":
                _, r, f = op
                vec[r] = vec[r] * f
            else:
                _, dst, f, src = op
                vec[dst] = vec[dst] - vec[src] * f
        zero = (lambda v: v == 0) if plain else (lambda v: v.is_zero())
        for i in self._nonpivot_rows:
            if not zero(vec[i]):
                return None
        out = [CycNumber.zero() for _ in range(self.ncols)]
        for col, row in zip(self._pivot_cols, self._pivot_rows):
            v = vec[row]
            out[col] = CycNumber.from_rational(v) if plain else v
        return out

    def free_columns(self) -> list[int]:
        pivots = set(self._pivot_cols)
        return [c for c in range(self.ncols) if c not in pivots]
