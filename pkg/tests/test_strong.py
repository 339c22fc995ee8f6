"""Chain-length selection and the exact-hit approximant."""

from fractions import Fraction

import numpy as np
import pytest

from operator_forge.exceptions import (GammaDegenerateError,
                                       HypothesisViolationError,
                                       InsufficientDimensionError)
from operator_forge.linalg import apply_power, embed, norm, operator_norm, project
from operator_forge.sampling import random_operator, random_unit_vector, rng
from operator_forge.strong import (StrongApproxRequest, choose_chain_length,
                                   choose_delta, strong_approximate,
                                   verify_strong)


def _brute_chain_length(R, delta, gamma, norm_x, norm_z):
    # exact rational re-statement of both growth inequalities
    Rf, df = Fraction(R), Fraction(delta)
    gf, nxf, nzf = Fraction(gamma), Fraction(norm_x), Fraction(norm_z)
    alpha = 1 + 3 * df / Rf
    m = 1
    while True:
        lhs = gf * (Rf + df) ** m
        ok1 = nxf == 0 or lhs > Rf ** (m + 1) * nxf / df
        ok2 = nzf == 0 or lhs > nzf * alpha ** (m + 1) / df
        if ok1 and ok2:
            return m
        m += 1


class TestChooseDelta:
    def test_small_r_cap(self):
        assert choose_delta(2.0, 0.5) == pytest.approx(1.0 / 12.0, abs=1e-15)

    def test_large_r_uses_epsilon_only(self):
        assert choose_delta(4.0, 0.6) == pytest.approx(0.1, abs=1e-15)

    def test_epsilon_branch_at_moderate_r(self):
        # R = 2.5: cap is 3.75, epsilon/6 = 0.5 wins
        assert choose_delta(2.5, 3.0) == pytest.approx(0.5, abs=1e-15)

    def test_rejects_bad_hypotheses(self):
        with pytest.raises(HypothesisViolationError):
            choose_delta(1.0, 0.5)
        with pytest.raises(HypothesisViolationError):
            choose_delta(2.0, 0.0)


class TestChooseChainLength:
    def test_reference_value(self):
        # gamma = 1, ||x|| = 1, ||z|| = 0, R = 2, delta = 1/12 reduces to
        # (25/24)^M > 24, whose smallest solution is 78
        assert choose_chain_length(2.0, 1.0 / 12.0, 1.0, 1.0, 0.0) == 78
        assert Fraction(25, 24) ** 78 > 24
        assert Fraction(25, 24) ** 77 <= 24

    @pytest.mark.parametrize("params", [
        (2.0, 0.25, 0.5, 2.0, 7.0),
        (1.5, 0.125, 1.0, 1.0, 0.0),
        (2.0, 0.0625, 0.75, 0.0, 3.0),
        (3.0, 0.5, 0.25, 1.5, 1.5),
    ])
    def test_matches_exact_rational_scan(self, params):
        assert choose_chain_length(*params) == _brute_chain_length(*params)

    def test_minimality(self):
        m = choose_chain_length(2.0, 0.25, 0.5, 2.0, 7.0)
        brute = _brute_chain_length(2.0, 0.25, 0.5, 2.0, 7.0)
        assert m == brute and m >= 1

    def test_monotone_in_epsilon_at_r_two(self):
        # longer chains for tighter epsilon; holds on this range because
        # delta = epsilon/6 stays below the R = 2 cap
        grid = np.linspace(0.05, 2.0, 40)
        lengths = [choose_chain_length(2.0, choose_delta(2.0, e), 1.0, 1.0, 0.0)
                   for e in grid]
        assert all(a >= b for a, b in zip(lengths, lengths[1:]))

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(HypothesisViolationError):
            choose_chain_length(2.0, 0.0, 1.0, 1.0, 1.0)
        with pytest.raises(HypothesisViolationError):
            choose_chain_length(2.0, 0.5, 0.0, 1.0, 1.0)


def _instance(seed, dim, n_controls, R, eps, z_scale=3.0):
    gen = rng(seed, 7)
    T = random_operator(gen, dim, 0.6 * R)
    controls = [random_unit_vector(gen, dim) for _ in range(n_controls)]
    x = random_unit_vector(gen, dim)
    z = z_scale * random_unit_vector(gen, dim)
    return StrongApproxRequest(T=T, R=R, controls=controls, x=x, z=z,
                               epsilon=eps, seed=seed)


class TestStrongApproximate:
    def test_zero_operator_no_controls(self):
        d = 3
        x = np.zeros(d, dtype=complex)
        x[0] = 1.0
        z = np.zeros(d, dtype=complex)
        z[1] = 7.0
        req = StrongApproxRequest(T=np.zeros((d, d), dtype=complex), R=2.0,
                                  controls=[], x=x, z=z, epsilon=0.5)
        res = strong_approximate(req)
        hit = apply_power(res.S, embed(x, res.ambient_dim), res.N)
        assert norm(hit - embed(z, res.ambient_dim)) < 1e-10
        assert operator_norm(res.S) <= 2.0 + 1e-9

    @pytest.mark.parametrize("seed,dim,n,R,eps", [
        (11, 6, 1, 1.3, 0.4),
        (12, 12, 2, 2.0, 0.5),
        (13, 24, 3, 2.8, 0.45),
        (14, 8, 1, 1.1, 0.3),
        (15, 10, 2, 2.0, 1.5),
        (16, 16, 3, 3.0, 0.5),
    ])
    def test_postconditions_on_random_instances(self, seed, dim, n, R, eps):
        req = _instance(seed, dim, n, R, eps)
        res = strong_approximate(req)
        rep = verify_strong(res, req)
        assert rep.norm_ok, rep.norm_value
        assert rep.hit_ok, rep.hit_residual
        assert all(rep.control_ok)
        for r, c in zip(rep.control_residuals, res.perturbed_controls):
            assert r <= 3.0 * res.delta * norm(c) + 1e-12
        assert res.ambient_dim >= res.base_dim + res.M + 1
        assert res.N == res.M + 1

    def test_long_chain_instance(self):
        # small epsilon drives the chain past the dense-norm cutoff
        req = _instance(21, 16, 3, 2.0, 0.1)
        res = strong_approximate(req)
        assert res.ambient_dim > 512
        rep = verify_strong(res, req)
        assert rep.ok, (rep.norm_value, rep.hit_residual, rep.control_residuals)

    def test_chain_invariants(self):
        req = _instance(31, 8, 2, 2.0, 0.8)
        res = strong_approximate(req)
        assert 0.0 < res.chain_gain <= req.R + res.delta
        c = req.R / (req.R + 3.0 * res.delta)
        step = c * res.chain_gain
        for j in range(min(res.M, 5)):
            image = res.S @ res.chain[:, j]
            assert norm(image - step * res.chain[:, j + 1]) < 1e-10

    def test_invariant_subspace_frame(self):
        req = _instance(41, 10, 2, 1.8, 0.6)
        res = strong_approximate(req)
        f = res.frame_v1
        gram = f.matrix.conj().T @ f.matrix
        assert np.abs(gram - np.eye(f.size)).max() < 1e-10
        gen = rng(99, 0)
        v = random_unit_vector(gen, res.ambient_dim)
        perp = v - project(f, v)
        assert norm(res.S @ perp) < 1e-8
        img = res.S @ v
        assert norm(img - project(f, img)) < 1e-8 * max(1.0, norm(img))

    def test_deterministic(self):
        req_a = _instance(55, 9, 2, 2.2, 0.7)
        req_b = _instance(55, 9, 2, 2.2, 0.7)
        res_a = strong_approximate(req_a)
        res_b = strong_approximate(req_b)
        assert res_a.M == res_b.M
        assert (res_a.S == res_b.S).all()


class TestAmbientPolicies:
    def test_fixed_policy_stays_in_place(self):
        req = _instance(61, 40, 1, 2.0, 2.0)
        req.ambient_policy = "fixed"
        res = strong_approximate(req)
        assert res.ambient_dim == 40
        rep = verify_strong(res, req)
        assert rep.ok

    def test_fixed_policy_reports_required_dimension(self):
        req = _instance(62, 8, 1, 2.0, 2.0)
        req.ambient_policy = "fixed"
        with pytest.raises(InsufficientDimensionError) as exc:
            strong_approximate(req)
        assert exc.value.required_dim is not None
        assert exc.value.required_dim > 8

    def test_unknown_policy_rejected(self):
        req = _instance(63, 8, 1, 2.0, 2.0)
        req.ambient_policy = "bogus"
        with pytest.raises(HypothesisViolationError):
            strong_approximate(req)


class TestGammaHandling:
    def test_unfixable_degeneracy_raises(self):
        # in dimension 2 the perturbed span always fills the whole space
        d = 2
        gen = rng(5, 0)
        T = random_operator(gen, d, 0.5)
        e1 = np.array([1.0, 0.0], dtype=complex)
        req = StrongApproxRequest(T=T, R=2.0, controls=[e1], x=e1,
                                  z=np.array([0.0, 1.0], dtype=complex),
                                  epsilon=0.6, retry_budget=3)
        with pytest.raises(GammaDegenerateError):
            strong_approximate(req)

    def test_retry_recovers_in_larger_space(self):
        d = 3
        T = np.zeros((d, d), dtype=complex)
        T[1, 0] = 0.5
        e1 = np.zeros(d, dtype=complex)
        e1[0] = 1.0
        z = np.zeros(d, dtype=complex)
        z[2] = 2.0
        req = StrongApproxRequest(T=T, R=2.0, controls=[e1], x=e1, z=z,
                                  epsilon=0.6, seed=4)
        res = strong_approximate(req)
        assert norm(res.perturbed_controls[0] - e1) > 1e-3
        rep = verify_strong(res, req)
        assert rep.ok


class TestHypothesisChecks:
    def test_rejects_non_unit_control(self):
        req = _instance(71, 6, 1, 2.0, 0.5)
        req.controls[0] = 2.0 * req.controls[0]
        with pytest.raises(HypothesisViolationError):
            strong_approximate(req)

    def test_rejects_oversized_operator(self):
        req = _instance(72, 6, 1, 1.2, 0.5)
        req.T = 5.0 * req.T
        with pytest.raises(HypothesisViolationError):
            strong_approximate(req)

    def test_rejects_zero_start(self):
        req = _instance(73, 6, 1, 2.0, 0.5)
        req.x = np.zeros(6, dtype=complex)
        with pytest.raises(HypothesisViolationError):
            strong_approximate(req)
