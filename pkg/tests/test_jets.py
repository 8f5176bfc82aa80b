import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from iet import fixtures
from iet.errors import DomainError
from iet.fixtures import D4, rotation
from iet.iem import (
    AffineBranch,
    BumpBranch,
    GeneralizedIEM,
    MoebiusBranch,
    StandardIEM,
)
from iet.induction import rv_step
from iet.jets import (
    ConjugacyNormalForm,
    Jet,
    boundary_log_slope,
    branch_jets,
    check_invariance,
    conjugate_iem,
    invariant,
    normal_form,
)
from iet.numeric import bigfloat


def rational_jet(rng, r):
    coeffs = [Fraction(rng.randrange(1, 60), rng.randrange(1, 40))]
    coeffs += [Fraction(rng.randrange(-30, 31), rng.randrange(1, 25))
               for _ in range(r - 1)]
    return Jet(coeffs)


class TestJetGroup:
    def test_example_composition(self):
        f = Jet([Fraction(2), Fraction(0)])
        g = Jet([Fraction(1), Fraction(1)])
        assert g.compose(f).coeffs == [Fraction(2), Fraction(4)]

    def test_inverse_exact(self):
        rng = random.Random(3)
        for _ in range(100):
            j = rational_jet(rng, 5)
            assert j.compose(j.inverse()).coeffs == \
                Jet.identity(5, Fraction(1)).coeffs
            assert j.inverse().compose(j).coeffs == \
                Jet.identity(5, Fraction(1)).coeffs

    def test_associativity_exact(self):
        rng = random.Random(9)
        for _ in range(100):
            f, g, h = (rational_jet(rng, 5) for _ in range(3))
            lhs = h.compose(g).compose(f)
            rhs = h.compose(g.compose(f))
            assert lhs.coeffs == rhs.coeffs

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_group_axioms_property(self, seed):
        rng = random.Random(seed)
        f, g = rational_jet(rng, 4), rational_jet(rng, 4)
        ident = Jet.identity(4, Fraction(1))
        assert f.compose(ident).coeffs == f.coeffs
        assert ident.compose(f).coeffs == f.coeffs
        assert g.compose(f).inverse().coeffs == \
            f.inverse().compose(g.inverse()).coeffs

    def test_orientation_guard(self):
        with pytest.raises(DomainError):
            Jet([Fraction(-1), Fraction(0)])

    def test_order_mismatch(self):
        with pytest.raises(DomainError):
            Jet([1.0, 0.0]).compose(Jet([1.0, 0.0, 0.0]))


class TestNormalForm:
    def test_linear_case(self):
        form, h = normal_form(Jet([2.0, 5.0, -3.0]))
        assert form.kind == "linear"
        assert form.linear == 2.0
        j = Jet([2.0, 5.0, -3.0])
        reduced = h.inverse().compose(j).compose(h)
        assert abs(reduced.coeffs[1]) < 1e-12
        assert abs(reduced.coeffs[2]) < 1e-12

    def test_parabolic_case(self):
        with mp.workprec(200):
            j = Jet([mpmath.mpf(1), mpmath.mpf(1), mpmath.mpf(0)])
            form, h = normal_form(j)
            assert form.kind == "parabolic"
            assert form.contact == 2 and form.sign == 1
            # verify by explicit re-conjugation
            reduced = h.inverse().compose(j).compose(h)
            assert abs(float(reduced.coeffs[1] - 1)) < 1e-40
            target = form.residue
            assert abs(float(reduced.coeffs[2] - target)) < 1e-40

    def test_parabolic_elimination(self):
        with mp.workprec(200):
            j = Jet([mpmath.mpf(1), mpmath.mpf("0.5"), mpmath.mpf("-0.3"),
                     mpmath.mpf("0.2"), mpmath.mpf("0.1")])
            form, h = normal_form(j)
            assert form.kind == "parabolic" and form.contact == 2
            reduced = h.inverse().compose(j).compose(h)
            # x + x^2 + a x^3: slots 4, 5 eliminated
            assert abs(float(reduced.coeffs[1] - form.sign)) < 1e-40
            assert abs(float(reduced.coeffs[3])) < 1e-38
            assert abs(float(reduced.coeffs[4])) < 1e-38

    def test_identity(self):
        form, _ = normal_form(Jet([1.0, 0.0, 0.0]))
        assert form.kind == "identity"

    def test_idempotent(self):
        with mp.workprec(200):
            j = Jet([mpmath.mpf(1), mpmath.mpf(2), mpmath.mpf(3)])
            form1, h = normal_form(j)
            reduced = h.inverse().compose(j).compose(h)
            form2, _ = normal_form(reduced)
            assert form1.distance(form2) < 1e-40


def affine_d2():
    """Affine circle-like map: slopes (2, 2/3) on lengths (1/4, 3/4)."""
    pi = fixtures.D2
    mode = bigfloat(256)
    with mode.workprec():
        q = mpmath.mpf(1) / 4
        top = [mpmath.mpf(0), q, mpmath.mpf(1)]
        bottom = [mpmath.mpf(0), 1 - 2 * q, mpmath.mpf(1)]
        branches = {
            "A": AffineBranch(top[0], top[1], bottom[1], mpmath.mpf(2)),
            "B": AffineBranch(top[1], top[2], bottom[0],
                              mpmath.mpf(2) / 3),
        }
        return GeneralizedIEM(pi, top, bottom, branches, mode, order=5)


def bump_d4(eps="0.02", power=7, bits=256):
    mode = bigfloat(bits)
    with mode.workprec():
        lengths = [mode.coerce(x) for x in ("0.3", "0.2", "0.15", "0.35")]
        top = [mode.coerce(0)]
        for lam in lengths:
            top.append(top[-1] + lam)
        by_letter = dict(zip("ABCD", lengths))
        bottom = [mode.coerce(0)]
        for a in D4.bottom_order():
            bottom.append(bottom[-1] + by_letter[a])
        branches = {}
        for i, a in enumerate("ABCD"):
            p = D4.position_bottom(a)
            branches[a] = BumpBranch(top[i], top[i + 1], bottom[p - 1],
                                     bottom[p], mode.coerce(eps), power)
        return GeneralizedIEM(D4, top, bottom, branches, mode, order=6)


class TestBranchJets:
    def test_standard_jets_identity(self):
        T = rotation(Fraction(17, 41))
        jets = branch_jets(T, 4)
        for jet in jets.values():
            assert jet.coeffs[0] == 1
            assert all(c == 0 for c in jet.coeffs[1:])

    def test_affine_jets(self):
        T = affine_d2()
        jets = branch_jets(T, 3)
        assert abs(float(jets[("A", "L")].coeffs[0]) - 2) < 1e-15
        assert abs(float(jets[("B", "R")].coeffs[0]) - 2 / 3) < 1e-15
        assert all(abs(float(c)) < 1e-60
                   for hp in jets for c in jets[hp].coeffs[1:])

    def test_flat_bump_identity_jets(self):
        # power-7 bumps vanish to order 6 at the endpoints
        T = bump_d4(power=7)
        jets = branch_jets(T, 5)
        for jet in jets.values():
            assert abs(float(jet.coeffs[0] - 1)) < 1e-50
            assert all(abs(float(c)) < 1e-50 for c in jet.coeffs[1:])


class TestInvariant:
    def test_standard_trivial(self):
        fam = invariant(rotation(Fraction(17, 41)), 4)
        assert fam.trivial

    def test_flat_deformation_trivial(self):
        fam = invariant(bump_d4(power=8), 6)
        assert fam.trivial

    def test_affine_log_slope(self):
        T = affine_d2()
        fam = invariant(T, 3)
        bv = boundary_log_slope(T)
        assert len(fam.forms) == len(bv.values)
        for form, comp in zip(fam.forms, bv.values):
            assert form.kind in ("linear", "identity")
            lin = form.linear if form.kind == "linear" else 1.0
            assert abs(float(mpmath.log(lin)) - float(comp)) < 1e-12

    def test_affine_boundary_sum_identity(self):
        T = affine_d2()
        bv = boundary_log_slope(T)
        with T.mode.workprec():
            direct = sum(
                mpmath.log(T.branch_taylor(a, T.top_interval(a)[1], 1)[1]) -
                mpmath.log(T.branch_taylor(a, T.top_interval(a)[0], 1)[1])
                for a in "AB")
            assert abs(float(bv.total() - direct)) < 1e-12

    def test_base_point_independence(self):
        T = bump_d4(power=2)  # nontrivial jets
        fam = invariant(T, 4)
        # recompute from a rotated starting point in each cycle
        from iet.combinatorics import sigma_and_cycles
        from iet.jets import branch_jets as bj, normal_form as nf
        from iet.piecewise import eps as eps_fn
        sigma = sigma_and_cycles(T.pi)
        jets = bj(T, 4)
        for ci, cyc in enumerate(sigma.cycles):
            rotated = cyc[2:] + cyc[:2]
            product = None
            for hp in rotated:
                factor = jets[hp].power(eps_fn(hp))
                product = factor if product is None else product.compose(factor)
            form, _ = nf(product)
            assert fam.forms[ci].distance(form) < 1e-10


class TestInvariance:
    def test_under_conjugation(self):
        T = bump_d4(power=2, eps="0.015")
        mode = T.mode
        with mode.workprec():
            h = BumpBranch(mode.coerce(0), mode.coerce(1), mode.coerce(0),
                           mode.coerce(1), mode.coerce("0.05"), 2)
            T2 = conjugate_iem(T, h, 5)
            rep = check_invariance(T, T2, 3)
        assert rep.max_form_distance < 1e-10

    def test_under_rv_step(self):
        T = bump_d4(power=2, eps="0.015")
        T2, arrow = rv_step(T)
        rep = check_invariance(T, T2, 3)
        assert rep.max_form_distance < 1e-10

    def test_standard_trivially_equal(self):
        T = rotation(Fraction(17, 41))
        T2, _ = rv_step(T)
        rep = check_invariance(T, T2, 3)
        assert rep.max_form_distance == 0.0
