import numpy as np
import pytest

from patchzoom.lle import reconstruct_hr, solve_weights


def oracle_weights(target, neighbors):
    """Equality-constrained least squares solved independently by substitution.

    Eliminates the constraint with w_M = 1 - sum(others), leaving a plain
    unconstrained least-squares problem over the first M-1 weights.
    """
    y = np.asarray(target, dtype=float)
    ny = np.asarray(neighbors, dtype=float)
    m = ny.shape[0]
    if m == 1:
        return np.array([1.0])
    base = ny[-1]
    design = (ny[:-1] - base).T  # (dim, M-1)
    rhs = y - base
    u, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    return np.append(u, 1.0 - u.sum())


def objective(target, neighbors, w):
    return float(np.sum((np.asarray(target) - w @ np.asarray(neighbors)) ** 2))


class TestSolveWeights:
    def test_single_neighbor(self, rng):
        w = solve_weights(rng.random(10), rng.random((1, 10)))
        np.testing.assert_allclose(w, [1.0])

    def test_symmetric_midpoint(self, rng):
        a, b = rng.random(8), rng.random(8)
        w = solve_weights((a + b) / 2, np.stack([a, b]))
        np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-9)

    def test_target_among_neighbors_reconstructs(self, rng):
        y = rng.random(10)
        neighbors = np.vstack([y, rng.random((3, 10))])
        w = solve_weights(y, neighbors)
        residual = np.linalg.norm(y - w @ neighbors)
        assert residual <= 1e-3 * np.linalg.norm(y)

    def test_oracle_equivalence(self, rng):
        # acceptance-grade sweep is in test_acceptance; this is the smoke version.
        # M <= dim keeps the oracle objective bounded away from zero: with more
        # neighbors than dimensions the target is exactly interpolable and the
        # trace ridge trades ~1e-5 of objective for stability, which the
        # dedicated exact-reconstruction tests cover at their own tolerance.
        for _ in range(100):
            dim = int(rng.integers(2, 26))
            m = int(rng.integers(1, min(dim, 15) + 1))
            y = rng.standard_normal(dim)
            ny = rng.standard_normal((m, dim))
            w = solve_weights(y, ny)
            assert w.sum() == pytest.approx(1.0, abs=1e-8)
            ours = objective(y, ny, w)
            best = objective(y, ny, oracle_weights(y, ny))
            assert ours <= best * 1.01 + 1e-6

    def test_affine_invariance(self, rng):
        y = rng.random(12)
        ny = rng.random((6, 12))
        w0 = solve_weights(y, ny)
        w1 = solve_weights(y + 3.7, ny + 3.7)
        np.testing.assert_allclose(w0, w1, atol=1e-6)

    def test_adding_target_copy_never_hurts(self, rng):
        for _ in range(25):
            y = rng.standard_normal(9)
            ny = rng.standard_normal((5, 9))
            before = objective(y, ny, solve_weights(y, ny))
            enlarged = np.vstack([ny, y])
            after = objective(y, enlarged, solve_weights(y, enlarged))
            assert after <= before + 1e-9

    def test_rejects_bad_input(self, rng):
        with pytest.raises(ValueError):
            solve_weights(np.array([1.0, np.nan]), np.ones((2, 2)))
        with pytest.raises(ValueError):
            solve_weights(np.ones(3), np.ones((2, 4)))


class TestReconstructHr:
    def test_single_weight_copies(self, rng):
        block = rng.random((5, 5))
        np.testing.assert_array_equal(reconstruct_hr([1.0], block[None]), block)

    def test_even_mix(self):
        blocks = np.stack([np.full((5, 5), 0.2), np.full((5, 5), 0.4)])
        np.testing.assert_allclose(reconstruct_hr([0.5, 0.5], blocks), 0.3)

    def test_affine_combination_of_equal_blocks(self, rng):
        block = rng.random((5, 5))
        w = rng.standard_normal(7)
        w /= w.sum()
        out = reconstruct_hr(w, np.tile(block, (7, 1, 1)))
        np.testing.assert_allclose(out, block, atol=1e-10)

    def test_rejects_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            reconstruct_hr([0.5, 0.5], rng.random((3, 5, 5)))
