import numpy as np
import pytest

from gpss.operator import (CountingOperator, DenseOperator, LinearOperator,
                           gen_gaussian_problem, gen_illconditioned_problem, load_problem,
                           problem_from_bytes, problem_hash, problem_to_bytes, save_problem,
                           spectral_norm_estimate)


def test_apply_small_cases():
    np.testing.assert_array_equal(DenseOperator(np.eye(2)).apply([3, -1]), [3, -1])
    np.testing.assert_array_equal(DenseOperator([[1, 2], [0, 1]]).apply([1, 1]), [3, 1])


def test_adjoint_small_cases():
    np.testing.assert_array_equal(DenseOperator(np.eye(2)).adjoint([1, 2]), [1, 2])
    np.testing.assert_array_equal(DenseOperator([[1, 2], [0, 1]]).adjoint([1, 0]), [1, 2])


def test_adjoint_matches_explicit_transpose(rng):
    A = rng.standard_normal((5, 8))
    K = DenseOperator(A)
    r = rng.standard_normal(5)
    np.testing.assert_allclose(K.adjoint(r), A.T @ r, rtol=1e-14)


def test_adjoint_identity_random_pairs(rng):
    K = DenseOperator(rng.standard_normal((5, 8)))
    for _ in range(100):
        u, v = rng.standard_normal(8), rng.standard_normal(5)
        lhs, rhs = K.apply(u) @ v, u @ K.adjoint(v)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


class _Shift(LinearOperator):
    """Matrix-free cyclic shift, to exercise the abstract base."""

    def __init__(self, p):
        super().__init__(p, p)

    def _matvec(self, x):
        return np.roll(x, 1)

    def _rmatvec(self, r):
        return np.roll(r, -1)


def test_matrix_free_operator(rng):
    K = _Shift(6)
    np.testing.assert_array_equal(K.to_dense(), np.roll(np.eye(6), 1, axis=0))
    u, v = rng.standard_normal(6), rng.standard_normal(6)
    assert K.apply(u) @ v == pytest.approx(u @ K.adjoint(v), rel=1e-12)
    assert spectral_norm_estimate(K) == pytest.approx(1.0)


def test_dimension_mismatch():
    K = DenseOperator(np.ones((2, 3)))
    with pytest.raises(ValueError):
        K.apply(np.ones(2))
    with pytest.raises(ValueError):
        K.adjoint(np.ones(3))


def test_counting_is_exact(rng):
    C = CountingOperator(DenseOperator(rng.standard_normal((4, 6))))
    C.apply(np.ones(6))
    assert C.count == 1
    C.adjoint(np.ones(4))
    assert C.count == 2
    for _ in range(5):
        C.apply(np.ones(6))
    assert C.count == 7


def test_dense_operator_is_read_only():
    K = DenseOperator(np.eye(2))
    with pytest.raises(ValueError):
        K.matrix[0, 0] = 5.0


@pytest.mark.parametrize("A, expected", [(3 * np.eye(3), 3.0), (np.diag([1.0, 5.0]), 5.0)])
def test_spectral_norm_simple(A, expected):
    assert spectral_norm_estimate(DenseOperator(A)) == pytest.approx(expected, rel=1e-8)


def test_spectral_norm_against_svd(rng):
    A = rng.standard_normal((20, 50))
    est = spectral_norm_estimate(DenseOperator(A))
    exact = np.linalg.svd(A, compute_uv=False)[0]
    assert est <= exact * (1 + 1e-14)
    assert abs(est - exact) / exact <= 1e-6


def test_spectral_norm_single_iteration_is_lower_bound(rng):
    A = rng.standard_normal((7, 9))
    assert spectral_norm_estimate(DenseOperator(A), max_iters=1) <= np.linalg.norm(A, 2)
    with pytest.raises(ValueError):
        spectral_norm_estimate(DenseOperator(A), max_iters=0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gaussian_problem_invariants(seed):
    prob = gen_gaussian_problem(60, 256, 10, 0.02, seed)
    assert prob.K.shape == (60, 256)
    assert abs(spectral_norm_estimate(prob.K) - 1) <= 1e-6
    assert np.count_nonzero(prob.x_true) == 10
    assert set(np.unique(prob.x_true[prob.x_true != 0])) <= {-1.0, 1.0}
    clean = prob.K.apply(prob.x_true)
    assert np.linalg.norm(prob.y - clean) / np.linalg.norm(clean) == pytest.approx(0.02, abs=1e-12)


def test_gaussian_problem_noiseless_and_deterministic():
    a = gen_gaussian_problem(20, 50, 4, 0.0, seed=5)
    np.testing.assert_array_equal(a.y, a.K.apply(a.x_true))
    b = gen_gaussian_problem(20, 50, 4, 0.0, seed=5)
    assert problem_to_bytes(a) == problem_to_bytes(b)
    assert problem_hash(a) != problem_hash(gen_gaussian_problem(20, 50, 4, 0.0, seed=6))


def test_gaussian_problem_rejects_too_many_spikes():
    with pytest.raises(ValueError):
        gen_gaussian_problem(10, 20, 21)


def test_full_scale_shape():
    # full 1848 x 8192 Gaussian configuration; only the cheap parts are checked
    prob = gen_gaussian_problem(1848, 8192, 160, 0.02, seed=0)
    assert prob.K.shape == (1848, 8192)
    clean = prob.K.apply(prob.x_true)
    assert np.linalg.norm(prob.y - clean) / np.linalg.norm(clean) == pytest.approx(0.02, abs=1e-12)


def test_illconditioned_condition_number():
    prob = gen_illconditioned_problem(4, 4, 2, decay=0.1, noise_level=0.0, seed=3)
    s = np.linalg.svd(prob.K.matrix, compute_uv=False)
    np.testing.assert_allclose(s, [1, 0.1, 0.01, 0.001], rtol=1e-10)
    assert s[0] / s[-1] == pytest.approx(1e3, rel=1e-9)


def test_illconditioned_rectangular():
    prob = gen_illconditioned_problem(128, 512, 16, decay=0.93, seed=0)
    s = np.linalg.svd(prob.K.matrix, compute_uv=False)
    assert s[0] == pytest.approx(1.0, rel=1e-12)
    assert s[0] / s[-1] >= 1e4


@pytest.mark.parametrize("decay", [0.0, 1.0, 1.5, -0.2])
def test_illconditioned_rejects_decay(decay):
    with pytest.raises(ValueError):
        gen_illconditioned_problem(4, 4, 1, decay=decay)


def test_illconditioned_pure_noise():
    prob = gen_illconditioned_problem(8, 8, 0, decay=0.5, noise_level=0.1, seed=1)
    assert not np.any(prob.x_true)
    assert np.linalg.norm(prob.y) == pytest.approx(0.1)


def test_serialization_round_trip(tmp_path):
    prob = gen_gaussian_problem(7, 11, 3, 0.02, seed=9)
    path = tmp_path / "p.bin"
    save_problem(prob, path)
    back = load_problem(path)
    np.testing.assert_array_equal(back.K.matrix, prob.K.matrix)
    np.testing.assert_array_equal(back.y, prob.y)
    np.testing.assert_array_equal(back.x_true, prob.x_true)
    assert (back.seed, back.noise_level) == (9, 0.02)


def test_serialization_byte_layout():
    prob = gen_gaussian_problem(2, 3, 1, 0.0, seed=4)
    raw = problem_to_bytes(prob)
    assert raw[:8] == b"L1PROB\x00\x01"
    assert int.from_bytes(raw[8:16], "little") == 2
    assert int.from_bytes(raw[16:24], "little") == 3
    assert int.from_bytes(raw[24:32], "little", signed=True) == 4
    K = np.frombuffer(raw[40:40 + 48], "<f8").reshape(2, 3)
    np.testing.assert_array_equal(K, prob.K.matrix)
    assert len(raw) == 40 + 8 * (6 + 2 + 3)


def test_serialization_rejects_garbage():
    with pytest.raises(ValueError):
        problem_from_bytes(b"nope")
    raw = problem_to_bytes(gen_gaussian_problem(2, 3, 1, 0.0))
    with pytest.raises(ValueError):
        problem_from_bytes(raw[:-8])
    with pytest.raises(ValueError):
        problem_from_bytes(b"X" + raw[1:])
