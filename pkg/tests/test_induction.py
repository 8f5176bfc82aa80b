import math
from fractions import Fraction

import mpmath
import pytest

from iet import fixtures, linalg
from iet.combinatorics import BOTTOM, TOP, path_completeness
from iet.errors import ConnectionFound, DomainError
from iet.fixtures import D2, D4, rotation
from iet.iem import StandardIEM
from iet.induction import (
    entrance_time_backward,
    entrance_time_forward,
    floor_index,
    iterate_rv,
    lengths_from_path,
    make_periodic_fixture,
    return_times,
    rv_step,
    tower_address,
    tower_floors,
    zorich_accelerate,
)
from iet.numeric import bigfloat


class TestRvStep:
    def test_d2_small_omega_is_bottom_type(self):
        # lengths (1-w, w) with w < 1/2: u^t_1 > u^b_1, bottom type per the
        # definition; the new lengths are (1-2w, w) either way.
        T = rotation(Fraction(1, 5))
        T1, arrow = rv_step(T)
        assert arrow.kind == BOTTOM
        assert T1.lengths["A"] == Fraction(3, 5)
        assert T1.lengths["B"] == Fraction(1, 5)

    def test_lengths_recovered_from_cocycle(self):
        T = lengths_from_path(D4, [TOP, BOTTOM, TOP, TOP, BOTTOM, TOP,
                                   BOTTOM, BOTTOM, TOP, BOTTOM, TOP, TOP],
                              seed=[2, 3, 5, 7])
        trace = iterate_rv(T, 12)
        for n in (3, 7, 12):
            b = trace.cocycle(0, n)
            lam_n = [trace.iem(n).lengths[a] for a in T.pi.alphabet]
            lam_0 = linalg.vec_mat(lam_n, b)  # B(0,n)^T lambda^(n)
            assert lam_0 == [T.lengths[a] for a in T.pi.alphabet]

    def test_connection_raises(self):
        with pytest.raises(ConnectionFound):
            iterate_rv(rotation(Fraction(2, 5)), 50)

    def test_immediate_connection(self):
        T = rotation(Fraction(1, 2))
        with pytest.raises(ConnectionFound):
            rv_step(T)


class TestGoldenAlternation:
    def test_arrows_alternate(self):
        fx = fixtures.circle_golden()
        trace = iterate_rv(fx.iem, 50, fast_cycles=False)
        kinds = [a.kind for a in trace.arrows]
        assert kinds == [TOP, BOTTOM] * 25

    def test_zorich_blocks_golden_all_ones(self):
        fx = fixtures.circle_golden()
        trace = iterate_rv(fx.iem, 40, fast_cycles=False)
        groups = zorich_accelerate(trace.arrows)
        assert all(g.size == 1 for g in groups)

    def test_zorich_blocks_match_continued_fraction(self):
        # Paper: the path takes a_1 times one arrow, a_2 times the next, ...
        # The canonical interval cut makes the first block a_1 - 1 (the
        # boundary convention); all later blocks equal the partial quotients.
        coeffs = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8]
        omega = fixtures.continued_fraction_value(coeffs, 512)
        T = rotation(omega, bigfloat(512))
        n_steps = sum(coeffs[:11]) + 5
        trace = iterate_rv(T, n_steps)
        sizes = [g.size for g in zorich_accelerate(trace.arrows)]
        assert sizes[0] in (coeffs[0], coeffs[0] - 1)
        assert sizes[1:10] == coeffs[1:10]

    def test_grouping_flattens_back(self):
        fx = fixtures.periodic_g2(bits=256)
        trace = iterate_rv(fx.iem, 30, fast_cycles=False)
        groups = zorich_accelerate(trace.arrows)
        assert [trace.arrows[i] for g in groups
                for i in range(g.start, g.stop)] == trace.arrows


class TestPeriodicFixture:
    def test_golden_loop_matrix(self):
        fx = fixtures.circle_golden()
        assert fx.matrix == [[1, 1], [1, 2]]
        with mpmath.mp.workprec(300):
            expected = (3 + mpmath.sqrt(5)) / 2
            assert abs(fx.perron - expected) < mpmath.mpf(2) ** -250
            # lengths proportional to (1, golden ratio)
            phi = (1 + mpmath.sqrt(5)) / 2
            ratio = fx.iem.lengths["B"] / fx.iem.lengths["A"]
            assert abs(ratio - phi) < mpmath.mpf(2) ** -200

    def test_g2_loop_spectrum(self):
        fx = fixtures.periodic_g2()
        assert linalg.char_poly(fx.matrix) == [1, -7, 13, -7, 1]
        moduli = fx.eigenvalue_moduli
        assert moduli[0] > moduli[1] > 1 > moduli[2] > moduli[3]

    def test_fixture_path_is_periodic(self):
        fx = fixtures.periodic_g2()
        trace = iterate_rv(fx.iem, 5 * len(fx.loop_kinds), fast_cycles=False)
        assert [a.kind for a in trace.arrows] == list(fx.loop_kinds) * 5

    def test_self_similarity_precision(self):
        fx = fixtures.periodic_g2()
        trace = iterate_rv(fx.iem, len(fx.loop_kinds), fast_cycles=False)
        deep = trace.iem(trace.depth).normalized()
        with fx.iem.mode.workprec():
            tol = mpmath.mpf(2) ** -400
            for a in fx.start.alphabet:
                assert abs(deep.lengths[a] - fx.iem.lengths[a]) < tol

    def test_non_primitive_rejected(self):
        with pytest.raises(DomainError):
            make_periodic_fixture(D2, ("top", "top"))

    def test_eigen_seed_returns_fixture(self):
        fx = fixtures.circle_golden()
        lam = [fx.iem.lengths[a] for a in "AB"]
        T = lengths_from_path(D2, fx.loop_kinds, seed=None)
        assert sum(T.lengths.values()) == 1


class TestLengthsFromPath:
    def test_window_for_top_runs(self):
        # k bottom-type arrows then one top arrow at the d=2 vertex force
        # lambda_A/lambda_B into the continued-fraction window.
        for k in (2, 3, 5):
            kinds = [BOTTOM] * k + [TOP]
            T = lengths_from_path(D2, kinds)
            trace = iterate_rv(T, k + 1, fast_cycles=False)
            assert [a.kind for a in trace.arrows] == kinds

    def test_total_is_one(self):
        T = lengths_from_path(D4, [TOP, BOTTOM, TOP, TOP, BOTTOM])
        assert sum(T.lengths.values()) == 1

    def test_first_return_against_direct_orbit(self):
        T = lengths_from_path(D4, [TOP, BOTTOM, BOTTOM, TOP, TOP, BOTTOM,
                                   TOP, BOTTOM, TOP], seed=[3, 1, 4, 1])
        trace = iterate_rv(T, 9)
        n = 9
        level = trace.iem(n)
        rt = return_times(trace, n)
        for a in T.pi.alphabet:
            p = level.pi.position_top(a)
            x = (level.top_points[p - 1] + level.top_points[p]) / 2
            y = T.evaluate(x)
            steps = 1
            while not (0 <= y < level.total):
                y = T.evaluate(y)
                steps += 1
            assert steps == rt[a]
            assert y == level.evaluate(x)


class TestTowers:
    def test_tower_floors_lengths(self):
        fx = fixtures.periodic_g2(bits=256)
        trace = iterate_rv(fx.iem, 16, fast_cycles=False)
        floors = tower_floors(trace, 0, 10)
        b = trace.cocycle(0, 10)
        alphabet = fx.start.alphabet
        for i, a in enumerate(alphabet):
            assert len(floors[a]) == sum(b[i])

    def test_address_and_entrance_times(self):
        fx = fixtures.periodic_g2(bits=384)
        trace = iterate_rv(fx.iem, 24, fast_cycles=False)
        n = 16
        with fx.iem.mode.workprec():
            for ub in fx.iem.bottom_singularities():
                m = entrance_time_forward(trace, ub, n)
                assert m > 0
                x = ub
                # verify by bounded direct iteration when feasible
                if m <= 5000:
                    for _ in range(m):
                        x = fx.iem.evaluate(x, side=1)
                        if 0 <= x < trace.iem(n).total:
                            break
                    assert 0 <= x < trace.iem(n).total
            for ut in fx.iem.top_singularities():
                m = entrance_time_backward(trace, ut, n, side=-1)
                assert m > 0

    def test_floor_index_consistency(self):
        fx = fixtures.periodic_g2(bits=256)
        trace = iterate_rv(fx.iem, 12, fast_cycles=False)
        with fx.iem.mode.workprec():
            x = fx.iem.mode.coerce("0.618")
            letter, j = floor_index(trace, x, 8)
            assert 0 <= j < return_times(trace, 8)[letter]


class TestFastCycles:
    def test_liouville_blocks(self):
        T = fixtures.liouville_d2(bits=512)
        n = sum(fixtures.LIOUVILLE_BLOCKS) + 10
        trace = iterate_rv(T, n)
        sizes = [g.size for g in zorich_accelerate(trace.arrows)]
        # first block is a_1 - 1 by the boundary convention
        assert sizes[0] in (1, 2)
        assert sizes[1:5] == [4, 16, 256, 65536]

    def test_fast_matches_slow(self):
        omega = fixtures.continued_fraction_value([7, 3, 9], 256)
        T = rotation(omega, bigfloat(256))
        fast = iterate_rv(T, 25, fast_cycles=True)
        slow = iterate_rv(T, 25, fast_cycles=False)
        assert [a.kind for a in fast.arrows] == [a.kind for a in slow.arrows]
        with T.mode.workprec():
            for a in "AB":
                assert abs(fast.iem(25).lengths[a] - slow.iem(25).lengths[a]) \
                    < T.mode.tiny()


class TestSpecExamples:
    def test_gamma_vector_special_sum_is_matrix(self):
        # S(l,n) restricted to Gamma is exactly B(l,n)
        from iet.piecewise import PiecewisePoly, special_birkhoff_poly
        T = lengths_from_path(D4, [TOP, BOTTOM, BOTTOM, TOP, TOP, BOTTOM,
                                   TOP, BOTTOM, TOP], seed=[3, 1, 4, 1])
        trace = iterate_rv(T, 8)
        vec = [Fraction(3), Fraction(-2), Fraction(5), Fraction(7)]
        poly = PiecewisePoly.from_gamma(T, vec)
        cur = poly
        for n in range(1, 9):
            cur = special_birkhoff_poly(trace, n - 1, n, cur)
        import iet.linalg as linalg
        expected = linalg.mat_vec(trace.cocycle(0, 8), vec)
        got = [cur.coeffs[a][0] for a in T.pi.alphabet]
        assert got == expected
        # phi = 1 gives the return times
        ones = PiecewisePoly.from_gamma(T, [Fraction(1)] * 4)
        cur = ones
        for n in range(1, 9):
            cur = special_birkhoff_poly(trace, n - 1, n, cur)
        rts = return_times(trace, 8)
        assert [cur.coeffs[a][0] for a in T.pi.alphabet] == \
            [rts[a] for a in T.pi.alphabet]

    def test_generalized_first_return_oracle(self):
        # T_hat from rv_step equals direct first-return evaluation
        from test_iem import bump_giem
        import mpmath
        T = bump_giem(eps="0.01", power=4, bits=512)
        That, arrow = rv_step(T)
        with T.mode.workprec():
            end = That.total
            tol = mpmath.mpf(2) ** -200
            for k in range(200):
                x = end * (2 * k + 1) / 400
                y = T.evaluate(x, side=1)
                steps = 1
                while not (0 <= y < end):
                    y = T.evaluate(y, side=1)
                    steps += 1
                assert steps <= 2
                assert abs(That.evaluate(x, side=1) - y) < tol

    def test_keane_smoke_minimality(self):
        # no connection to depth N: sampled orbits meet every window of
        # width 10 * max interval length of the deepest level reached
        import mpmath
        fx = fixtures.circle_golden(bits=512)
        trace = iterate_rv(fx.iem, 8, fast_cycles=False)
        with fx.iem.mode.workprec():
            deep = trace.iem(8)
            w = 10 * max(deep.lengths.values())
            windows = int(float(fx.iem.total / w))
            for x0 in ("0.1234", "0.777"):
                x = fx.iem.mode.coerce(x0)
                hit = set()
                for _ in range(4000):
                    x = fx.iem.evaluate(x, side=1)
                    hit.add(min(int(float(x / w)), windows))
                assert {k for k in range(windows)} <= hit

    def test_rational_connection_periodic_point(self):
        # a rational rotation has a periodic point at desk scale
        T = rotation(Fraction(2, 5))
        x = Fraction(1, 7)
        y = x
        for _ in range(5):
            y = T.evaluate(y)
        assert y == x
