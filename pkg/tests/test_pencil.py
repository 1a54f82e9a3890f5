import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import gevp_values, projected_gevp_values, random_pd_pencil, spectral_norm_eigh
from rotkrylov.errors import (
    AtInfinity,
    DimensionMismatch,
    EmptySubspace,
    NotHermitian,
    NotPositiveDefinite,
)
from rotkrylov.pencil import (
    EigenRay,
    MatrixPencil,
    back_transform,
    batched_ground,
    eigh,
    forward_rotate,
    ground_sensitivity,
    hermitian,
    noise_magnitude,
    rotate_pencil,
    solve_gevp_thresholded,
    solve_rotated,
    threshold_basis,
    tikhonov_solve,
)

# the toy model's e+ value, from the scipy oracle on the kept eigenspace: 11 + 2 / 1.9
TOY_NAIVE_1_05 = 12.052631578947368

seeds = st.integers(0, 2**32 - 1)
angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def random_pencil(seed, dim):
    return MatrixPencil(*random_pd_pencil(np.random.default_rng(seed), dim))


class TestHermitianMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(NotHermitian) as err:
            hermitian([[1, 1], [0, 1]])
        assert err.value.max_asymmetry == pytest.approx(1.0)

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            hermitian(np.ones((2, 3)))

    def test_copy_is_read_only(self):
        a = hermitian(np.eye(2))
        with pytest.raises(ValueError):
            a[0, 0] = 3

    def test_pencil_dims_must_match(self):
        with pytest.raises(DimensionMismatch):
            MatrixPencil(np.eye(2), np.eye(3))


class TestEigh:
    def test_identity(self):
        lam, u = eigh(np.eye(3))
        assert np.allclose(lam, 1)
        assert np.allclose(u.conj().T @ u, np.eye(3))

    def test_diagonal(self):
        lam, _ = eigh(np.diag([2.0, -1.0, 0.0]))
        assert np.allclose(lam, [-1, 0, 2])

    def test_toy_overlap(self, toy):
        assert np.allclose(eigh(toy.s)[0], [0.1, 1.0, 1.9], atol=1e-14)

    @given(seeds, st.integers(1, 12))
    def test_residual_and_orthonormality(self, seed, dim):
        h = random_pencil(seed, dim).h
        lam, u = eigh(h)
        scale = np.linalg.norm(h, 2)
        assert np.linalg.norm(h @ u - u * lam, 2) <= 1e-10 * max(scale, 1)
        assert np.allclose(u.conj().T @ u, np.eye(dim), atol=1e-10)
        assert np.all(np.diff(lam) >= 0)


class TestThresholdBasis:
    def test_identity(self):
        w = threshold_basis(np.eye(3), 0.5)
        assert np.allclose(np.abs(w), np.eye(3))

    def test_toy_large_tau_keeps_e_plus(self, toy):
        w = threshold_basis(toy.s, 1.05)
        assert w.shape == (3, 1)
        e_plus = np.array([0, 1, 1]) / np.sqrt(2)
        assert abs(abs(np.vdot(e_plus, w[:, 0])) / np.linalg.norm(w) - 1) < 1e-12

    def test_toy_small_tau_keeps_all(self, toy):
        assert threshold_basis(toy.s, 0.05).shape == (3, 3)

    def test_can_be_empty(self):
        assert threshold_basis(np.eye(2), 2.0).shape == (2, 0)

    def test_tie_is_kept(self):
        assert threshold_basis(np.diag([1.0, 0.25]), 0.25).shape[1] == 2

    @given(seeds, st.integers(1, 10), st.floats(0, 1.5))
    def test_whitening(self, seed, dim, tau):
        s = random_pencil(seed, dim).s
        w = threshold_basis(s, tau)
        k = w.shape[1]
        assert np.allclose(w.conj().T @ s @ w, np.eye(k), atol=1e-10)
        assert k == np.count_nonzero(np.linalg.eigvalsh(s) >= tau)


class TestSolveThresholded:
    def test_diagonal(self):
        sol = solve_gevp_thresholded(MatrixPencil(np.diag([3.0, 1.0, 2.0]), np.eye(3)), 0.5)
        assert np.allclose(sol.values, [1, 2, 3])
        assert sol.kept_dim == 3 and sol.theta == 0

    def test_toy_unthresholded(self, toy):
        assert solve_gevp_thresholded(toy, 0.0).ground == pytest.approx(11.0, abs=1e-12)

    def test_toy_naive_at_1_05(self, toy):
        sol = solve_gevp_thresholded(toy, 1.05)
        assert sol.kept_dim == 1
        assert sol.values == pytest.approx([TOY_NAIVE_1_05], abs=1e-12)
        assert projected_gevp_values(toy.h, toy.s, 1.05) == pytest.approx([TOY_NAIVE_1_05], abs=1e-12)

    def test_empty(self, toy):
        with pytest.raises(EmptySubspace):
            solve_gevp_thresholded(toy, 5.0)

    def test_negative_tau(self, toy):
        with pytest.raises(ValueError):
            solve_gevp_thresholded(toy, -1.0)

    @given(seeds, st.integers(1, 8), st.floats(0, 0.9))
    def test_matches_projection_oracle(self, seed, dim, tau):
        p = random_pencil(seed, dim)
        lam = np.linalg.eigvalsh(p.s)
        assume(np.min(np.abs(lam - tau)) > 1e-6)
        sol = solve_gevp_thresholded(p, tau)
        assert np.allclose(sol.values, projected_gevp_values(p.h, p.s, tau), rtol=1e-8, atol=1e-8)

    @given(seeds, st.integers(1, 8))
    def test_vectors_unit_norm_and_phase_fixed(self, seed, dim):
        p = random_pencil(seed, dim)
        sol = solve_gevp_thresholded(p, 0.0)
        assert sol.vectors.shape == (dim, len(sol.values))
        assert np.allclose(np.linalg.norm(sol.vectors, axis=0), 1)
        assert np.all(np.diff(sol.values) >= 0)
        for k in range(dim):
            col = sol.vectors[:, k]
            first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert abs(first.imag) < 1e-12 and first.real > 0
            r = p.h @ col - sol.values[k] * (p.s @ col)
            assert np.linalg.norm(r) < 1e-8 * (1 + abs(sol.values[k]))


class TestRotation:
    def test_zero_angle(self, toy):
        r = rotate_pencil(toy, 0.0)
        assert np.array_equal(r.h, toy.h) and np.array_equal(r.s, toy.s)

    def test_quarter_turn(self, toy):
        r = rotate_pencil(toy, np.pi / 2)
        assert np.allclose(r.h, -toy.s, atol=1e-15) and np.allclose(r.s, toy.h, atol=1e-15)

    def test_toy_1_4_keeps_everything(self, toy):
        assert np.linalg.eigvalsh(rotate_pencil(toy, 1.4).s).min() > 1.05

    def test_rejects_nan(self, toy):
        with pytest.raises(ValueError):
            rotate_pencil(toy, np.nan)

    @given(seeds, st.integers(1, 6), angles)
    def test_hermitian_and_periodic(self, seed, dim, theta):
        p = random_pencil(seed, dim)
        r = rotate_pencil(p, theta)
        for m in (r.h, r.s):
            assert np.max(np.abs(m - m.conj().T)) <= 1e-14
        r2 = rotate_pencil(p, theta + 2 * np.pi)
        assert np.allclose(r2.h, r.h, atol=1e-12) and np.allclose(r2.s, r.s, atol=1e-12)
        r1 = rotate_pencil(p, theta + np.pi)
        assert np.allclose(r1.h, -r.h, atol=1e-12) and np.allclose(r1.s, -r.s, atol=1e-12)


class TestBackTransform:
    def test_identity_angle(self):
        assert back_transform(5.0, 0.0) == 5.0

    def test_quarter_turn(self):
        assert back_transform(-1 / 3, np.pi / 2) == pytest.approx(3.0, abs=1e-14)

    def test_round_trip_example(self):
        assert back_transform(forward_rotate(11.0, 0.7), 0.7) == pytest.approx(11.0, abs=1e-10)

    def test_pole(self):
        with pytest.raises(AtInfinity):
            back_transform(0.0, np.pi / 2)
        with pytest.raises(AtInfinity):
            forward_rotate(0.0, np.pi / 2)

    @given(st.floats(-1e3, 1e3), st.floats(-np.pi, np.pi))
    def test_inversion(self, mu, theta):
        c, s = np.cos(theta), np.sin(theta)
        assume(abs(c + mu * s) > 1e-3)
        mt = forward_rotate(mu, theta)
        assume(abs(c - mt * s) > 1e-3)
        assert back_transform(mt, theta) == pytest.approx(mu, rel=1e-10, abs=1e-10)

    @given(st.floats(-100, 100), st.floats(-np.pi, np.pi))
    def test_matches_eigenray(self, mu, theta):
        ray = EigenRay.from_value(mu).rotate(theta)
        assume(abs(ray.beta) > 1e-3)
        assert ray.value == pytest.approx(forward_rotate(mu, theta), rel=1e-12, abs=1e-12)
        assert ray.rotate(-theta).value == pytest.approx(mu, rel=1e-10, abs=1e-10)

    def test_eigenray_validation(self):
        with pytest.raises(ValueError):
            EigenRay(0.0, 0.0)
        with pytest.raises(AtInfinity):
            EigenRay(1.0, 0.0).value


class TestSolveRotated:
    def test_zero_angle_is_naive(self, toy):
        a, b = solve_rotated(toy, 0.0, 1.05), solve_gevp_thresholded(toy, 1.05)
        assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)

    def test_toy_recovery(self, toy):
        sol = solve_rotated(toy, 1.4, 1.05)
        assert sol.kept_dim == 3
        assert sol.ground == pytest.approx(11.0, abs=1e-8)

    @pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
    def test_random_6x6_equivalence(self, theta):
        p = random_pencil(6, 6)
        sol = solve_rotated(p, theta, 0.0)
        assert np.allclose(sol.values, gevp_values(p.h, p.s), atol=1e-9)
        assert sol.n_infinite == 0 and sol.n_complex == 0

    @given(seeds, st.integers(1, 8), st.floats(0.01, np.pi - 0.01))
    def test_unthresholded_equivalence(self, seed, dim, theta):
        p = random_pencil(seed, dim)
        ref = gevp_values(p.h, p.s)
        den = np.cos(theta) + ref * np.sin(theta)
        assume(np.min(np.abs(den)) > 1e-3)
        sol = solve_rotated(p, theta, 0.0)
        assert np.allclose(sol.values, ref, rtol=1e-8, atol=1e-8 * np.max(np.abs(ref)))

    @given(seeds, st.integers(2, 6), st.floats(0.01, np.pi - 0.01))
    def test_ground_vector_invariant(self, seed, dim, theta):
        p = random_pencil(seed, dim)
        ref = gevp_values(p.h, p.s)
        assume(ref[1] - ref[0] > 1e-3)
        assume(np.min(np.abs(np.cos(theta) + ref * np.sin(theta))) > 1e-2)
        a = solve_rotated(p, 0.0, 0.0).ground_vector
        b = solve_rotated(p, theta, 0.0).ground_vector
        assert abs(abs(np.vdot(a, b)) - 1) < 1e-6

    @given(seeds, st.integers(1, 6), st.floats(0.0, 1.0), st.floats(0.01, np.pi - 0.01))
    def test_pi_periodic(self, seed, dim, tau, theta):
        p = random_pencil(seed, dim)
        try:
            a = solve_rotated(p, theta, tau)
        except EmptySubspace:
            with pytest.raises(EmptySubspace):
                solve_rotated(p, theta + np.pi, tau)
            return
        b = solve_rotated(p, theta + np.pi, tau)
        assert a.kept_dim == b.kept_dim
        assert np.allclose(a.values, b.values, rtol=1e-7, atol=1e-7)

    def test_drops_values_at_infinity(self):
        # singular S: the second direction is an infinite eigenvalue that the
        # rotation makes finite, and the back-transform sends it back to infinity
        p = MatrixPencil(np.eye(2), np.diag([1.0, 0.0]))
        sol = solve_rotated(p, 0.3, 0.0)
        assert sol.kept_dim == 2 and sol.n_infinite == 1
        assert sol.values == pytest.approx([1.0])


class TestBatchedGround:
    @given(seeds, st.integers(2, 5), st.floats(0.0, 1.0), st.floats(0.0, np.pi))
    def test_matches_single_solves(self, seed, dim, tau, theta):
        rng = np.random.default_rng(seed)
        pencils = [MatrixPencil(*random_pd_pencil(rng, dim, cond=1e3)) for _ in range(4)]
        h = np.array([p.h for p in pencils])
        s = np.array([p.s for p in pencils])
        ground, kept = batched_ground(h, s, theta, tau)
        for g, k, p in zip(ground, kept, pencils):
            try:
                sol = solve_rotated(p, theta, tau)
            except EmptySubspace:
                assert np.isnan(g) and k == 0
                continue
            assert k == sol.kept_dim
            if sol.values.size:
                assert g == pytest.approx(sol.ground, rel=1e-8, abs=1e-8)
            else:
                assert np.isnan(g)

    def test_angle_array_shape_and_zero_angle(self, toy):
        h, s = toy.h[None], toy.s[None]
        thetas = np.array([0.0, 0.5, 1.4])
        ground, kept = batched_ground(h, s, thetas, 1.05)
        assert ground.shape == kept.shape == (3, 1)
        assert ground[0, 0] == solve_gevp_thresholded(toy, 1.05).ground
        assert kept[:, 0].tolist() == [1, 2, 3]
        assert ground[2, 0] == pytest.approx(11.0, abs=1e-8)


class TestTikhonov:
    def test_small_shift(self):
        sol = tikhonov_solve(MatrixPencil(np.diag([1.0, 2.0]), np.eye(2)), 1e-6)
        assert np.allclose(sol.values, [1, 2], rtol=1e-5)
        assert sol.kept_dim == 2

    def test_large_shift_limit(self, rng):
        p = random_pencil(3, 4)
        eps = 1e8
        sol = tikhonov_solve(p, eps)
        assert np.allclose(sol.values * eps, np.linalg.eigvalsh(p.h), rtol=1e-6, atol=1e-6)

    def test_toy(self, toy):
        sol = tikhonov_solve(toy, 0.01)
        ref = gevp_values(toy.h, toy.s + 0.01 * np.eye(3))[0]
        assert sol.ground == pytest.approx(ref, abs=1e-10)
        # the shift moves the e- overlap eigenvalue to 0.11, so the ground value is 1.1 / 0.11
        assert sol.ground == pytest.approx(10.0, abs=1e-10)

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefinite):
            tikhonov_solve(MatrixPencil(np.eye(2), -np.eye(2)), 0.1)

    def test_eps_positive(self, toy):
        with pytest.raises(ValueError):
            tikhonov_solve(toy, 0.0)


class TestNoiseMagnitude:
    def test_zero(self, toy):
        assert noise_magnitude(toy, toy) == 0

    def test_diagonal(self, toy):
        noisy = MatrixPencil(toy.h, toy.s + np.diag([0.3, 0, 0]))
        assert noise_magnitude(toy, noisy) == pytest.approx(0.3)

    @given(seeds)
    def test_matches_eigh_oracle(self, seed):
        rng = np.random.default_rng(seed)
        truth = MatrixPencil(*random_pd_pencil(rng, 4))
        e, f = (random_pd_pencil(rng, 4)[0] for _ in range(2))
        noisy = MatrixPencil(truth.h + e, truth.s + f)
        ref = np.sqrt(spectral_norm_eigh(noisy.h - truth.h) ** 2 + spectral_norm_eigh(noisy.s - truth.s) ** 2)
        assert noise_magnitude(truth, noisy) == pytest.approx(ref, abs=1e-10)

    def test_mismatch(self, toy):
        with pytest.raises(DimensionMismatch):
            noise_magnitude(toy, MatrixPencil(np.eye(2), np.eye(2)))


class TestGroundSensitivity:
    def test_already_normalized(self):
        assert ground_sensitivity(MatrixPencil(np.diag([1.0, 2.0]), np.eye(2)), 0.0) == pytest.approx(1.0)

    def test_toy(self, toy):
        assert ground_sensitivity(toy, 0.0) == pytest.approx(1 / np.sqrt(0.1), rel=1e-12)

    def test_independent_of_hamiltonian_scale(self, toy):
        scaled = MatrixPencil(2 * toy.h, toy.s)
        assert ground_sensitivity(scaled, 0.0) == pytest.approx(ground_sensitivity(toy, 0.0), rel=1e-12)

    def test_rotated_toy_is_less_sensitive(self, toy):
        assert ground_sensitivity(toy, 1.05, 1.4) < ground_sensitivity(toy, 0.0)

    def test_empty(self, toy):
        with pytest.raises(EmptySubspace):
            ground_sensitivity(toy, 10.0)
