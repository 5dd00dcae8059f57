"""Monte-Carlo complexity estimators and the closed-form class bound."""

import math

import numpy as np
import pytest

from koopbound.kernels import kernel_trace_bound, sobolev_kernel
from koopbound.rademacher import (
    FunctionClassSpec,
    InfeasibleClassError,
    class_upper_bound,
    empirical_rademacher_lower,
    evaluate_networks,
    rademacher_exact,
    rademacher_lower_fixed,
    rkhs_ball_rademacher,
    sample_networks,
)


class TestClassSpec:
    def test_empty_class_rejected(self):
        with pytest.raises(InfeasibleClassError, match="class is empty"):
            FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.0, D=2.0)

    def test_nonpositive_constants_rejected(self):
        with pytest.raises(InfeasibleClassError):
            FunctionClassSpec(widths=(2, 2), constraint="inv", C=0.0, D=0.5)
        with pytest.raises(InfeasibleClassError):
            FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.0, D=-1.0)

    def test_unknown_constraint(self):
        with pytest.raises(InfeasibleClassError, match="unknown constraint"):
            FunctionClassSpec(widths=(2, 2), constraint="spectral", C=1.0, D=0.5)

    def test_inv_needs_square_chain(self):
        with pytest.raises(InfeasibleClassError, match="equal widths"):
            FunctionClassSpec(widths=(2, 3), constraint="inv", C=1.5, D=0.5)

    def test_inj_needs_non_decreasing(self):
        with pytest.raises(InfeasibleClassError, match="non-decreasing"):
            FunctionClassSpec(widths=(3, 2), constraint="inj", C=1.5, D=0.5)


class TestSampling:
    def test_constraints_hold_on_samples(self):
        spec = FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.5, D=0.5)
        rng = np.random.default_rng(0)
        params = sample_networks(spec, rng, 50)
        ws, bs = params[0]
        assert ws.shape == (50, 2, 2)
        sigma1 = np.linalg.norm(ws, ord=2, axis=(1, 2))
        assert np.all(sigma1 <= 1.5 + 1e-12)
        assert np.all(np.abs(np.linalg.det(ws)) >= 0.5 - 1e-12)
        assert np.all(np.linalg.norm(bs, axis=1) <= spec.bias_bound + 1e-12)

    def test_injective_constraint_rectangular(self):
        spec = FunctionClassSpec(widths=(2, 3), constraint="inj", C=1.5, D=0.5)
        ws, _ = sample_networks(spec, np.random.default_rng(1), 30)[0]
        assert ws.shape == (30, 3, 2)
        grams = np.einsum("bij,bik->bjk", ws, ws)
        assert np.all(np.sqrt(np.linalg.det(grams)) >= 0.5 - 1e-9)

    def test_too_tight_constraint_raises(self):
        # feasible region exists (D < C^d) but rejection never lands in it
        spec = FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.5, D=2.2499)
        with pytest.raises(InfeasibleClassError, match="rejected"):
            sample_networks(spec, np.random.default_rng(2), 10)

    def test_values_in_unit_interval(self):
        spec = FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.5, D=0.5)
        rng = np.random.default_rng(3)
        params = sample_networks(spec, rng, 20)
        vals = evaluate_networks(spec, params, rng.standard_normal((6, 2)))
        assert vals.shape == (20, 6)
        assert np.all(vals > 0) and np.all(vals <= 1)


class TestEstimators:
    def test_exact_matches_hand_value(self):
        # single function on two points: E max over signs of (s1 v1 + s2 v2)/2
        vals = np.array([[1.0, 2.0]])
        # the four sign vectors give (3, -1, 1, -3)/2 → mean 0
        assert rademacher_exact(vals) == pytest.approx(0.0)

    def test_exact_two_functions(self):
        vals = np.array([[1.0, 0.0], [0.0, 1.0]])
        # per sign vector max is (1, 1, 0, 1)/2 except (-1,-1) giving -1/2
        assert rademacher_exact(vals) == pytest.approx((1 + 1 + 1 - 1) / 4 / 2)

    def test_fixed_mc_converges_to_exact(self):
        rng = np.random.default_rng(4)
        vals = rng.random((5, 8))
        exact = rademacher_exact(vals)
        mc = rademacher_lower_fixed(vals, draws=4000, seed=0)
        assert mc == pytest.approx(exact, abs=0.02)

    def test_exact_refuses_large_n(self):
        with pytest.raises(ValueError, match="too many"):
            rademacher_exact(np.ones((2, 21)))

    def test_deterministic_by_seed(self):
        spec = FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.5, D=0.5)
        pts = np.random.default_rng(5).standard_normal((10, 2))
        a = empirical_rademacher_lower(pts, spec, draws=20, candidates=30, seed=7)
        b = empirical_rademacher_lower(pts, spec, draws=20, candidates=30, seed=7)
        c = empirical_rademacher_lower(pts, spec, draws=20, candidates=30, seed=8)
        assert a == b
        assert a != c

    def test_more_candidates_never_hurts_much(self):
        # the estimate is a max over candidates per draw, so enlarging the
        # candidate pool (same seed stream) can only raise the per-draw max
        spec = FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.5, D=0.5)
        pts = np.random.default_rng(6).standard_normal((10, 2))
        small = empirical_rademacher_lower(pts, spec, draws=15, candidates=20, seed=1)
        large = empirical_rademacher_lower(pts, spec, draws=15, candidates=200, seed=1)
        assert large >= small - 1e-12

    def test_bad_draw_counts(self):
        spec = FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.5, D=0.5)
        with pytest.raises(ValueError):
            empirical_rademacher_lower(np.ones((3, 2)), spec, draws=0)


class TestRkhsBall:
    def test_exact_below_bound(self):
        # the kernel diagonal is constant, so the Jensen step is tight here
        # and exact coincides with the bound up to rounding
        pts = np.random.default_rng(7).standard_normal((25, 2))
        exact, bound = rkhs_ball_rademacher(pts, radius=2.0, d=2, s=1.55)
        assert 0 < exact <= bound * (1 + 1e-12)
        assert exact == pytest.approx(bound)

    def test_exact_formula(self):
        pts = np.zeros((4, 1))
        exact, bound = rkhs_ball_rademacher(pts, radius=3.0, d=1, s=1.0)
        k0 = sobolev_kernel(np.zeros(1), np.zeros(1), 1, 1.0)
        assert exact == pytest.approx(3.0 / 4 * math.sqrt(4 * k0))
        assert bound == pytest.approx(3.0 * kernel_trace_bound(1, 1.0) / 2)

    def test_linear_in_radius(self):
        pts = np.random.default_rng(8).standard_normal((9, 3))
        e1, b1 = rkhs_ball_rademacher(pts, radius=1.0, d=3, s=2.0)
        e2, b2 = rkhs_ball_rademacher(pts, radius=5.0, d=3, s=2.0)
        assert e2 == pytest.approx(5 * e1)
        assert b2 == pytest.approx(5 * b1)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            rkhs_ball_rademacher(np.ones((3, 1)), radius=0.0, d=1, s=1.0)


class TestClassUpperBound:
    def test_formula(self):
        spec = FunctionClassSpec(widths=(2, 2, 2), constraint="inv", C=1.5, D=0.5)
        val = class_upper_bound(spec, n=20, s=1.05, B=2.0, g_norm=3.0, sigma_norm=1.1)
        per = 1.1 * 1.5 ** 1.05 / math.sqrt(0.5)
        assert val == pytest.approx(2.0 * 3.0 / math.sqrt(20) * per ** 2)

    def test_monotone_in_constraint_constants(self):
        # looser classes (larger C, smaller D) can only have larger bounds
        def bound(C, D):
            spec = FunctionClassSpec(widths=(2, 2), constraint="inv", C=C, D=D)
            return class_upper_bound(spec, n=20, s=1.05, B=2.0, g_norm=3.0, sigma_norm=1.1)

        assert bound(2.0, 0.5) > bound(1.5, 0.5)
        assert bound(1.5, 0.25) > bound(1.5, 0.5)

    def test_mc_estimate_monotone_in_class(self):
        # paired seeds: enlarging C on the same sign/sample stream should
        # give a systematically larger (or equal) complexity estimate
        pts = np.random.default_rng(9).standard_normal((12, 2))
        tight = FunctionClassSpec(widths=(2, 2), constraint="inv", C=1.2, D=0.5)
        loose = FunctionClassSpec(widths=(2, 2), constraint="inv", C=2.5, D=0.5)
        lo = empirical_rademacher_lower(pts, tight, draws=40, candidates=60, seed=2)
        hi = empirical_rademacher_lower(pts, loose, draws=40, candidates=60, seed=2)
        assert hi > lo * 0.95
