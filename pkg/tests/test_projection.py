import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import nearest_physical_cvxpy, nearest_unit_diag_2x2
from rotkrylov.errors import NotHermitian
from rotkrylov.krylov import build_toy_pencil
from rotkrylov.noise import hermitian_noise
from rotkrylov.projection import is_physical, nearest_physical_overlap, project_stack

seeds = st.integers(0, 2**32 - 1)


def physical(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    s = g @ g.conj().T
    d = np.sqrt(np.real(np.diag(s)))
    return s / np.outer(d, d)


def check_constraints(x):
    assert np.allclose(np.diag(x), 1, atol=1e-10)
    assert np.linalg.eigvalsh(x).min() >= -1e-9
    assert np.max(np.abs(x - x.conj().T)) <= 1e-14


def test_physical_input_is_a_fixed_point():
    s = build_toy_pencil().s
    rep = nearest_physical_overlap(s)
    assert np.array_equal(rep.projected, s)
    assert rep.frobenius_distance == 0 and rep.iterations == 1 and rep.converged


def test_2x2_example():
    rep = nearest_physical_overlap(np.array([[1, 1.5], [1.5, 1]]))
    assert np.allclose(rep.projected, [[1, 1], [1, 1]], atol=1e-8)
    assert rep.converged


# 2x2 real symmetric grid: diagonal and off-diagonal entries on a lattice
GRID_2X2 = list(itertools.product([0.5, 1.0, 1.7], [0.2, 1.3], [-2.0, -0.9, 0.0, 0.4, 1.5]))


@pytest.mark.parametrize("a11,a22,a12", GRID_2X2)
def test_2x2_grid_matches_sweep(a11, a22, a12):
    a = np.array([[a11, a12], [a12, a22]])
    ref, dist = nearest_unit_diag_2x2(a)
    rep = nearest_physical_overlap(a)
    assert np.linalg.norm(rep.projected - ref) < 1e-4
    assert rep.frobenius_distance == pytest.approx(dist, abs=1e-4)


@pytest.mark.parametrize("seed", range(6))
def test_3x3_matches_convex_solver(seed):
    rng = np.random.default_rng(seed)
    a = physical(rng, 3) + hermitian_noise(rng, 3, 0.5)
    ref, dist = nearest_physical_cvxpy(a)
    rep = nearest_physical_overlap(a)
    assert np.linalg.norm(rep.projected - ref) < 1e-4
    assert rep.frobenius_distance == pytest.approx(dist, abs=1e-4)


def test_noisy_dim8_stays_within_noise():
    rng = np.random.default_rng(8)
    truth = physical(rng, 8)
    noise = hermitian_noise(rng, 8, 1e-4)
    rep = nearest_physical_overlap(truth + noise)
    assert rep.frobenius_distance <= np.linalg.norm(noise)


def test_not_hermitian():
    with pytest.raises(NotHermitian):
        nearest_physical_overlap(np.array([[1, 2], [0, 1]]))


def test_max_iter_flag():
    rng = np.random.default_rng(3)
    a = physical(rng, 6) + hermitian_noise(rng, 6, 1.0)
    rep = nearest_physical_overlap(a, max_iter=2)
    assert not rep.converged and rep.iterations == 2


def test_stack_matches_single():
    rng = np.random.default_rng(5)
    stack = np.array([physical(rng, 4) + hermitian_noise(rng, 4, 0.2) for _ in range(5)])
    out, its, conv = project_stack(stack)
    for k in range(5):
        rep = nearest_physical_overlap(stack[k])
        assert np.allclose(out[k], rep.projected, atol=1e-12)
        assert its[k] == rep.iterations
    assert conv.all()


@given(seeds, st.integers(1, 6), st.floats(1e-6, 1.0))
def test_constraints_idempotence_nonexpansive(seed, dim, var):
    rng = np.random.default_rng(seed)
    truth = physical(rng, dim)
    noisy = truth + hermitian_noise(rng, dim, var)
    rep = nearest_physical_overlap(noisy)
    assert rep.converged
    x = rep.projected
    check_constraints(x)
    assert is_physical(x)
    again = nearest_physical_overlap(x).projected
    assert np.allclose(again, x, atol=1e-9)
    assert np.linalg.norm(x - truth) <= np.linalg.norm(noisy - truth) + 1e-8
