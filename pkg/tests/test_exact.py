import math
import random
from fractions import Fraction

import pytest

from qmf.exact import (
    ConductorMismatchError,
    CycNumber,
    LinearSolver,
    bernoulli,
    cyc_embed,
    cyclotomic_polynomial,
    divisors,
    euler_phi,
    moebius,
    primes_upto,
    zeta_at_negative,
)


def test_elementary_helpers():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert euler_phi(1) == 1
    assert euler_phi(12) == 4
    assert euler_phi(25) == 20
    assert [moebius(n) for n in range(1, 11)] == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]
    assert primes_upto(30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_cyclotomic_polynomials():
    assert cyclotomic_polynomial(1) == (-1, 1)
    assert cyclotomic_polynomial(2) == (1, 1)
    assert cyclotomic_polynomial(3) == (1, 1, 1)
    assert cyclotomic_polynomial(4) == (1, 0, 1)
    assert cyclotomic_polynomial(6) == (1, -1, 1)
    assert cyclotomic_polynomial(12) == (1, 0, -1, 0, 1)
    # degree phi(M), monic, and phi(105) has a coefficient outside {-1,0,1}
    poly105 = cyclotomic_polynomial(105)
    assert len(poly105) == euler_phi(105) + 1
    assert poly105[-1] == 1
    assert min(poly105) == -2


def test_roots_of_unity_reduce():
    z5 = CycNumber.root_of_unity(5)
    assert z5**5 == 1
    assert sum((z5**e for e in range(1, 5)), CycNumber.zero()) == -1
    # conductor 2 collapses to the rational -1
    assert CycNumber.root_of_unity(2).conductor == 1
    assert CycNumber.root_of_unity(2) == -1
    z12 = CycNumber.root_of_unity(12)
    assert z12**12 == 1
    assert z12**6 == -1


def test_embedding_example():
    # zeta_3 viewed inside Q(zeta_6): z^2 reduced mod z^2 - z + 1 is z - 1
    z3 = CycNumber.root_of_unity(3)
    image = cyc_embed(z3, 6)
    assert image.conductor == 6
    assert image.coords == (Fraction(-1), Fraction(1))
    with pytest.raises(ConductorMismatchError):
        cyc_embed(z3, 4)


def test_embedding_is_ring_homomorphism():
    rng = random.Random(20260823)
    z3 = CycNumber.root_of_unity(3)
    for _ in range(60):
        a = sum(
            (z3**e * Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for e in range(2)),
            CycNumber.zero(),
        )
        b = sum(
            (z3**e * Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for e in range(2)),
            CycNumber.zero(),
        )
        assert cyc_embed(a * b, 12) == cyc_embed(a, 12) * cyc_embed(b, 12)
        assert cyc_embed(a + b, 12) == cyc_embed(a, 12) + cyc_embed(b, 12)


def test_field_axioms_fuzz():
    rng = random.Random(77)
    z12 = CycNumber.root_of_unity(12)

    def rand_elt():
        return sum(
            (
                z12**e * Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                for e in range(4)
            ),
            CycNumber.zero(),
        )

    for _ in range(40):
        a, b, c = rand_elt(), rand_elt(), rand_elt()
        assert (a + b) * c == a * c + b * c
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        if not a.is_zero():
            assert a * a.inverse() == 1
            assert (a / a) == 1


def test_inverse_example():
    z4 = CycNumber.root_of_unity(4)
    inv = (1 + z4).inverse()
    assert inv == (1 - z4) * Fraction(1, 2)


def test_mixed_conductor_arithmetic():
    z4 = CycNumber.root_of_unity(4)
    z3 = CycNumber.root_of_unity(3)
    prod = z4 * z3
    assert prod.conductor == 12
    assert prod == CycNumber.root_of_unity(12, 7)  # 7 = 3*(1) + 4*(1) mod 12 exponent mix
    assert (z4 + z3) - z3 == z4


def test_rationality_predicates():
    z6 = CycNumber.root_of_unity(6)
    x = z6 + z6**5  # zeta_6 + conjugate = 1
    assert x.is_rational()
    assert x.as_rational() == 1
    assert not z6.is_rational()


def test_bernoulli_values():
    assert bernoulli(2) == Fraction(1, 6)
    assert bernoulli(4) == Fraction(-1, 30)
    assert bernoulli(6) == Fraction(1, 42)
    assert bernoulli(8) == Fraction(-1, 30)
    assert bernoulli(10) == Fraction(5, 66)
    assert bernoulli(12) == Fraction(-691, 2730)
    with pytest.raises(ValueError):
        bernoulli(3)
    with pytest.raises(ValueError):
        bernoulli(0)


def test_zeta_negative_values():
    assert zeta_at_negative(4) == Fraction(1, 120)
    assert zeta_at_negative(6) == Fraction(-1, 252)


def test_bernoulli_against_partial_sum_bound():
    # independent numeric check: zeta(k) = (2 pi)^k |B_k| / (2 k!) for even k
    for k in (4, 6, 12):
        partial = sum(n ** (-k) for n in range(1, 4000))
        predicted = (2 * math.pi) ** k * abs(bernoulli(k)) / (2 * math.factorial(k))
        assert abs(partial - predicted) < 1e-10


def test_linear_solver_rational():
    rows = [
        [CycNumber.from_rational(1), CycNumber.from_rational(2)],
        [CycNumber.from_rational(0), CycNumber.from_rational(1)],
        [CycNumber.from_rational(1), CycNumber.from_rational(3)],
    ]
    solver = LinearSolver(rows)
    assert solver.rank == 2
    sol = solver.solve(
        [CycNumber.from_rational(5), CycNumber.from_rational(2), CycNumber.from_rational(7)]
    )
    assert sol is not None
    assert [c.as_rational() for c in sol] == [Fraction(1), Fraction(2)]
    # inconsistent target is rejected, not least-squares'd
    assert solver.solve(
        [CycNumber.from_rational(5), CycNumber.from_rational(2), CycNumber.from_rational(8)]
    ) is None


def test_linear_solver_cyclotomic():
    z = CycNumber.root_of_unity(4)
    one = CycNumber.one()
    rows = [[one, z], [z, one]]
    solver = LinearSolver(rows)
    assert solver.rank == 2
    target = [one + 2 * z, z + 2 * one]
    sol = solver.solve(target)
    assert sol == [CycNumber.from_rational(1), CycNumber.from_rational(2)]


def test_linear_solver_rank_deficiency():
    one = CycNumber.from_rational(1)
    two = CycNumber.from_rational(2)
    solver = LinearSolver([[one, two], [one, two]])
    assert solver.rank == 1
    assert solver.free_columns() == [1]
