"""Graded basis assembly and exact decomposition."""

from fractions import Fraction

import pytest

from qmf.exact import CycNumber
from qmf.eisenstein import e2_series, raw_e2_atom
from qmf.newforms import newforms_for
from qmf.qseries import QSeries
from qmf.quasimodular import (
    BasisAtom,
    InsufficientPrecisionError,
    PrecisionPolicy,
    assemble_basis,
    constant_one_atom,
    d_closure_check,
    decompose,
    omega_membership,
)

PART_RANK = {"eis": 0, "new": 1, "old": 2}


def texts(atoms):
    return [a.spec_text() for a in atoms]


# ---------------------------------------------------------------- listings


def test_level6_weight2_eisenstein_listing():
    atoms = assemble_basis(6, 2, ("eis",))
    assert texts(atoms) == ["1", "E2twist[2]", "E2twist[3]", "E2twist[6]", "E2"]
    assert all(a.part == "eis" for a in atoms)


def test_level1_weight2_listing():
    # weight <= 2 at level 1 is spanned by the constant and E2 alone
    assert texts(assemble_basis(1, 2)) == ["1", "E2"]


def test_level1_new_part_through_weight12():
    atoms = assemble_basis(1, 12, ("new",))
    assert texts(atoms) == ["D^0(newform[1,12,delta])"]


def test_level1_old_part_is_empty():
    assert assemble_basis(1, 12, ("old",)) == []


def test_level2_new_old_split():
    # undilated forms of both levels 1 and 2 are new; only the proper
    # dilation of delta is old
    new = texts(assemble_basis(2, 12, ("new",)))
    old = texts(assemble_basis(2, 12, ("old",)))
    assert new == [
        "D^0(newform[2,8,a])",
        "D^1(newform[2,8,a])",
        "D^0(newform[2,10,a])",
        "D^2(newform[2,8,a])",
        "D^1(newform[2,10,a])",
        "D^0(newform[1,12,delta])",
    ]
    assert old == ["D^0(dilate[2](newform[1,12,delta]))"]


def test_atom_counts_and_precision_policy():
    atoms = assemble_basis(2, 12)
    by_part = {}
    for a in atoms:
        by_part[a.part] = by_part.get(a.part, 0) + 1
    assert len(atoms) == 50
    assert by_part == {"eis": 43, "new": 6, "old": 1}
    assert PrecisionPolicy(2, 12, len(atoms)).p_req == 59

    atoms6 = assemble_basis(6, 12)
    by_part6 = {}
    for a in atoms6:
        by_part6[a.part] = by_part6.get(a.part, 0) + 1
    assert len(atoms6) == 140
    assert by_part6 == {"eis": 85, "new": 35, "old": 20}
    assert PrecisionPolicy(6, 12, len(atoms6)).p_req == 193


def test_canonical_order():
    atoms = assemble_basis(6, 8)
    weights = [a.weight for a in atoms]
    assert weights == sorted(weights)
    for left, right in zip(atoms, atoms[1:]):
        if left.weight == right.weight:
            assert PART_RANK[left.part] <= PART_RANK[right.part]


def test_part_filter_validation():
    with pytest.raises(ValueError):
        assemble_basis(1, 4, ("eisenstein",))
    with pytest.raises(ValueError):
        assemble_basis(1, 3)


# ------------------------------------------------------------------ atoms


def test_atom_weight_and_expand():
    one = constant_one_atom()
    assert one.weight == 0
    assert one.spec_text() == "1"
    series = one.expand(5)
    assert series.coefficient(0) == CycNumber.from_rational(1)
    assert all(series.coefficient(n).is_zero() for n in range(1, 5))

    e2 = BasisAtom("eis", raw_e2_atom(), 2)
    assert e2.weight == 6
    assert e2.spec_text() == "D^2(E2)"
    assert e2.expand(10) == e2_series(10).apply_D(1).apply_D(1)


def test_eisenstein_atom_bare_at_r0():
    atoms = assemble_basis(6, 4, ("eis",))
    seen = texts(atoms)
    assert "E2twist[2]" in seen          # r = 0 stays bare
    assert "D^1(E2twist[2])" in seen     # derivatives get wrapped
    assert "D^0(E2twist[2])" not in seen


# ---------------------------------------------------------------- decompose


def test_round_trip_level1():
    P = PrecisionPolicy(1, 14, len(assemble_basis(1, 14))).p_req
    delta = newforms_for(1, 12)[0].expand(P)
    f = e2_series(P).scale(5) + delta.apply_D(1).scale(3)
    dec = decompose(f, 1, 14)
    assert not dec.residual
    assert dec.escalations == 0
    nz = {a.spec_text(): c for a, c in dec.nonzero()}
    assert nz == {
        "E2": CycNumber.from_rational(5),
        "D^1(newform[1,12,delta])": CycNumber.from_rational(3),
    }
    assert dec.part_is_zero("old")
    assert dec.report_text() == (
        "eis E2 : 5\n"
        "new D^1(newform[1,12,delta]) : 3\n"
        "residual: none"
    )


def test_round_trip_level2_old_part():
    atoms = assemble_basis(2, 12)
    P = PrecisionPolicy(2, 12, len(atoms)).p_req
    by_text = {a.spec_text(): a for a in atoms}
    dilated = by_text["D^0(dilate[2](newform[1,12,delta]))"]
    twist = by_text["E2twist[2]"]
    f = dilated.expand(P) + twist.expand(P).scale(-3)
    dec = decompose(f, 2, 12)
    assert not dec.residual
    assert dec.coordinate(dilated) == CycNumber.from_rational(1)
    assert dec.coordinate(twist) == CycNumber.from_rational(-3)
    assert dec.part_is_zero("new")
    assert dec.report_text() == (
        "eis E2twist[2] : -3\n"
        "old D^0(dilate[2](newform[1,12,delta])) : 1\n"
        "residual: none"
    )


def test_round_trip_cyclotomic_coefficients():
    # level 25 mixes rational and Q(zeta_4) coordinates; E2twist[25] only
    # separates from E2 - 25 at row 25, so any start below that depth has
    # to escalate before the rank check clears
    atoms = assemble_basis(25, 2)
    P = 4 * PrecisionPolicy(25, 2, len(atoms)).p_req
    twisted = [a for a in atoms if "5.1" in a.spec_text()]
    assert len(twisted) == 1
    c = CycNumber.root_of_unity(4) + 2
    f = twisted[0].expand(P).scale(c) + e2_series(P).scale(Fraction(1, 3))
    dec = decompose(f, 25, 2, initial_rows=20)
    assert not dec.residual
    assert dec.escalations == 1
    assert dec.coordinate(twisted[0]) == c
    for atom, coeff in dec.items():
        if atom == twisted[0]:
            continue
        if atom.spec_text() == "E2":
            assert coeff == CycNumber.from_rational(Fraction(1, 3))
        else:
            assert coeff.is_zero()


def test_not_in_span():
    f = QSeries([0, 1, 1], 8)
    dec = decompose(f, 1, 2)
    assert dec.residual
    assert dec.items() == []
    assert dec.report_text() == "residual: present"


def test_insufficient_precision():
    f = e2_series(3)
    with pytest.raises(InsufficientPrecisionError) as info:
        decompose(f, 1, 2)
    assert info.value.required == PrecisionPolicy(1, 2, 2).p_req
    assert info.value.have == 3


def test_escalation_from_shallow_initial_rows():
    f = assemble_basis(1, 4)[2].expand(48)
    dec = decompose(f, 1, 4, initial_rows=2)
    assert dec.escalations >= 1
    assert not dec.residual
    nz = dec.nonzero()
    assert len(nz) == 1 and nz[0][1] == CycNumber.from_rational(1)


def test_initial_rows_beyond_precision():
    f = e2_series(10)
    with pytest.raises(InsufficientPrecisionError):
        decompose(f, 1, 2, initial_rows=100)


def test_coordinate_unknown_atom():
    P = PrecisionPolicy(1, 2, 2).p_req
    dec = decompose(e2_series(P), 1, 2)
    with pytest.raises(KeyError):
        dec.coordinate(BasisAtom("eis", raw_e2_atom(), 5))


# ---------------------------------------------------------------- closure


def test_d_closure_level1():
    report = d_closure_check(1, 4)
    assert report.ok
    rows = {atom.spec_text(): dict(
        (a.spec_text(), c) for a, c in coords) for atom, coords in report.rows}
    # derivative of each atom is again a single atom one weight step up
    assert rows["1"] == {}
    assert rows["E2"] == {"D^1(E2)": CycNumber.from_rational(1)}
    assert rows["E[4,1.1,1]"] == {"D^1(E[4,1.1,1])": CycNumber.from_rational(1)}


def test_d_closure_level2_images_are_single_atoms():
    report = d_closure_check(2, 4)
    assert report.ok
    for atom, coords in report.rows:
        if atom.payload is None:
            assert coords == []
            continue
        assert len(coords) == 1
        image, coeff = coords[0]
        assert coeff == CycNumber.from_rational(1)
        assert image.weight == atom.weight + 2


# -------------------------------------------------------------- membership


def test_membership_dilated_delta():
    delta2 = newforms_for(1, 12)[0].expand(101).dilate(2, 101)
    verdict = omega_membership(delta2, 2, 100)
    assert verdict.ok
    assert verdict.violations == []
    assert verdict.report_text() == (
        "omega-membership: true (primes to 100, level 2)"
    )


def test_membership_delta_fails_at_level1():
    delta = newforms_for(1, 12)[0].expand(101)
    verdict = omega_membership(delta, 1, 100)
    assert not verdict.ok
    first_prime, value = verdict.violations[0]
    assert first_prime == 2
    assert value == CycNumber.from_rational(-24)


def test_membership_zero_series():
    zero = QSeries([], 60)
    assert omega_membership(zero, 1, 50).ok


def test_membership_precision_guard():
    with pytest.raises(InsufficientPrecisionError):
        omega_membership(e2_series(50), 1, 50)
