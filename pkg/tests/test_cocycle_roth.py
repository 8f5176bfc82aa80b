import math

import mpmath
import numpy as np
import pytest

from iet import fixtures, linalg
from iet.cocycle import (
    factor_minimal_complete,
    lyapunov_and_stable_space,
    per_period_exponents,
    positivity_window_check,
    roth_condition_a,
    roth_condition_b,
    roth_condition_c,
    stable_frames_per_factor,
)
from iet.combinatorics import omega_matrix
from iet.errors import DomainError
from iet.induction import cocycle_norm, iterate_rv


def g2_path(periods):
    fx = fixtures.periodic_g2()
    return fx, fx.path(periods)


class TestFactors:
    def test_golden_factors_constant(self):
        fx = fixtures.circle_golden()
        trace = iterate_rv(fx.iem, 40, fast_cycles=False)
        factors = factor_minimal_complete(trace.arrows)
        assert all(f.stop - f.start == 2 for f in factors)
        assert all(f.z == factors[0].z for f in factors)

    def test_b_is_product_of_z(self):
        fx, path = g2_path(6)
        factors = factor_minimal_complete(path)
        b3 = linalg.mat_mul(factors[2].z,
                            linalg.mat_mul(factors[1].z, factors[0].z))
        assert factors[2].b == b3

    def test_periodic_factors_eventually_periodic(self):
        fx, path = g2_path(10)
        factors = factor_minimal_complete(path)
        zs = [tuple(map(tuple, f.z)) for f in factors]
        period = None
        for p in range(1, 5):
            if all(zs[i] == zs[i + p] for i in range(3, len(zs) - p)):
                period = p
                break
        assert period is not None


class TestConditionA:
    def test_periodic_ratio_decays(self):
        fx, path = g2_path(40)
        factors = factor_minimal_complete(path)
        rep = roth_condition_a(factors)
        assert rep.verdict == "consistent"
        for i, r in enumerate(rep.ratios, start=1):
            assert r <= 3.0 / i

    def test_liouville_rejected(self):
        T = fixtures.liouville_d2()
        n = sum(fixtures.LIOUVILLE_BLOCKS) + 40
        trace = iterate_rv(T, n)
        factors = factor_minimal_complete(trace.arrows)
        rep = roth_condition_a(factors[:6])
        assert rep.verdict == "rejected"
        assert rep.tail_max > 0.5

    def test_insufficient_data(self):
        fx, path = g2_path(1)
        factors = factor_minimal_complete(path)
        rep = roth_condition_a(factors[:1])
        assert rep.verdict == "insufficient"
        assert rep.ratios == []


class TestConditionB:
    def test_g2_theta_matches_eigenvalues(self):
        fx, path = g2_path(35)
        factors = factor_minimal_complete(path)
        lengths = [fx.iem.lengths[a] for a in fx.start.alphabet]
        rep = roth_condition_b(factors, lengths)
        moduli = fx.eigenvalue_moduli
        expected = 1 - math.log(float(moduli[1])) / math.log(float(moduli[0]))
        assert abs(rep.theta_tail - expected) < 0.01 * abs(expected)

    def test_golden_theta_two(self):
        fx = fixtures.circle_golden()
        trace = iterate_rv(fx.iem, 80, fast_cycles=False)
        factors = factor_minimal_complete(trace.arrows)
        lengths = [fx.iem.lengths[a] for a in "AB"]
        rep = roth_condition_b(factors, lengths)
        assert abs(rep.theta_tail - 2.0) < 0.02
        # raw series is reported unclamped even when theta > 1
        assert rep.theta_series[-1] > 1.0


class TestLyapunov:
    def test_g2_exponents_match_loop_spectrum(self):
        fx, path = g2_path(200)
        per_period, split = per_period_exponents(path, len(fx.loop_kinds), 200)
        expected = [math.log(float(m)) for m in fx.eigenvalue_moduli]
        for got, want in zip(per_period, expected):
            assert abs(got - want) <= 1e-4 * abs(want)
        assert split.stable_dim == 2

    def test_golden_exponents(self):
        # 200 periods shrink lengths to ~2^-278; the cancellation guard
        # then demands a mantissa beyond 588 bits.
        fx = fixtures.circle_golden(bits=768)
        trace = iterate_rv(fx.iem, 400, fast_cycles=False)
        per_period, split = per_period_exponents(trace.arrows, 2, 200)
        lam1 = math.log(float((3 + mpmath.sqrt(5)) / 2))
        assert abs(per_period[0] - lam1) < 1e-6
        assert abs(per_period[1] + lam1) < 1e-6

    def test_exponent_sum_near_zero(self):
        fx, path = g2_path(120)
        split = lyapunov_and_stable_space(path, genus=2)
        assert split.det_drift < 1e-8

    def test_exponents_pair_up(self):
        fx, path = g2_path(120)
        per_period, _ = per_period_exponents(path, len(fx.loop_kinds), 120)
        assert abs(per_period[0] + per_period[-1]) < 1e-3
        assert abs(per_period[1] + per_period[-2]) < 1e-3

    def test_stable_space_in_image_of_omega(self):
        fx, path = g2_path(80)
        split = lyapunov_and_stable_space(path, genus=2)
        assert split.restricted
        assert split.stable_residual_to_omega < 1e-9

    def test_stable_basis_contracts(self):
        # n = 10 keeps ||B(n)|| * eps_machine below the decay scale; the
        # float64 stable basis cannot certify decay much deeper.
        fx, path = g2_path(60)
        split = lyapunov_and_stable_space(path, genus=2)
        b10 = np.eye(4)
        factors = factor_minimal_complete(path)
        for f in factors[:10]:
            b10 = np.array(f.z, dtype=float) @ b10
        image = b10 @ split.stable_basis
        norm_b = cocycle_norm(factors[9].b)
        # ||B(n) chi|| decays like ||B(n)||^-tau along stable directions
        assert np.abs(image).max() < norm_b ** -0.3

    def test_d5_fixture_restricted(self):
        fx = fixtures.periodic_d5s2()
        path = fx.path(60)
        split = lyapunov_and_stable_space(path, genus=2)
        assert split.stable_dim == 2
        assert split.restricted


class TestConditionC:
    def test_periodic_ratios_decay(self):
        fx, path = g2_path(40)
        factors = factor_minimal_complete(path)
        frames = stable_frames_per_factor(factors)
        rep = roth_condition_c(factors, 2, frames)
        tail_r = rep.restrict_ratios[len(rep.restrict_ratios) // 2:]
        tail_q = rep.quotient_ratios[len(rep.quotient_ratios) // 2:]
        assert max(tail_r) < 0.05
        assert max(tail_q) < 0.05

    def test_liouville_quotient_does_not_decay(self):
        # For d=2 the det-1 positivity structure keeps the restriction and
        # quotient-inverse norms <= O(1), so the (c) ratios cannot blow up;
        # they stay bounded away from 0 instead of tending to it (on the
        # periodic fixtures they do tend to 0 through the k=l-1 samples).
        # The binding rejection of this control is condition (a).
        T = fixtures.liouville_d2()
        n = sum(fixtures.LIOUVILLE_BLOCKS) + 40
        trace = iterate_rv(T, n)
        factors = factor_minimal_complete(trace.arrows)[:6]
        frames = stable_frames_per_factor(factors)
        rep = roth_condition_c(factors, 1, frames, margin=1)
        assert all(abs(q) > 0.3 for q in rep.quotient_ratios)
        assert roth_condition_a(factors).verdict == "rejected"


class TestPositivity:
    def test_g2_windows_positive(self):
        fx, path = g2_path(25)
        factors = factor_minimal_complete(path)
        rep = positivity_window_check(factors, 4)
        assert rep.status == "ok"
        assert rep.window_length == 5

    def test_d2_single_factor_window(self):
        fx = fixtures.circle_golden()
        trace = iterate_rv(fx.iem, 20, fast_cycles=False)
        factors = factor_minimal_complete(trace.arrows)
        rep = positivity_window_check(factors, 2)
        assert rep.status == "ok"
        assert rep.window_length == 1
        assert all(linalg.is_positive(f.z) for f in factors)

    def test_insufficient(self):
        fx, path = g2_path(2)
        factors = factor_minimal_complete(path)
        rep = positivity_window_check(factors[:2], 4)
        assert rep.status == "insufficient"


class TestNormProperties:
    def test_norm_monotone_and_submultiplicative(self):
        fx = fixtures.periodic_g2()
        factors = factor_minimal_complete(fx.path(20))
        norms = [f.norm_b for f in factors]
        assert all(a <= b for a, b in zip(norms, norms[1:]))
        for f in factors:
            assert linalg.det(f.b) == 1
        # ||B(m)|| <= ||B(n)|| ||B(n,m)||
        import iet.linalg as la
        for n, m in ((3, 9), (5, 14), (0, 7)):
            bnm = la.identity(4)
            for f in factors[n:m]:
                bnm = la.mat_mul(f.z, bnm)
            assert factors[m - 1].norm_b <= \
                factors[n - 1].norm_b * cocycle_norm(bnm) if n > 0 else True
