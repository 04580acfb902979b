import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscar.cs import (
    DctPlan,
    MeasurementSet,
    SolverConfig,
    SparseCoefficients,
    dct_forward,
    dct_inverse,
    reconstruct,
    sparsity_fraction,
)
from oscar.errors import InvalidInputError
from oscar.landscape import nrmse, sample_uniform


def dct_matrix(n):
    """Orthonormal DCT-II matrix straight from the cosine definition."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    m[0] *= np.sqrt(1 / n)
    m[1:] *= np.sqrt(2 / n)
    return m


def dense_dct2(x):
    return dct_matrix(x.shape[0]) @ x @ dct_matrix(x.shape[1]).T


def synthetic(seed, shape=(64, 64), atoms=10):
    rng = np.random.default_rng(seed)
    c = np.zeros(shape)
    c.flat[rng.choice(c.size, atoms, replace=False)] = 1.0
    return DctPlan(shape).inverse(c)


def test_dct_matches_dense_matrix_oracle():
    rng = np.random.default_rng(1)
    for shape in [(8, 8), (5, 12), (1, 7), (16, 3)]:
        x = rng.normal(size=shape)
        got = dct_forward(x).as_array()
        assert np.allclose(got, dense_dct2(x), atol=1e-12)


def test_dct_1d_and_3d_against_oracle():
    rng = np.random.default_rng(2)
    x = rng.normal(size=9)
    assert np.allclose(dct_forward(x).as_array(), dct_matrix(9) @ x, atol=1e-12)
    y = rng.normal(size=(3, 4, 5))
    expect = np.einsum("ai,bj,ck,ijk->abc", dct_matrix(3), dct_matrix(4), dct_matrix(5), y)
    assert np.allclose(dct_forward(y).as_array(), expect, atol=1e-12)


def test_constant_grid_has_only_dc():
    c = dct_forward(np.full((4, 4), 2.5)).as_array().copy()
    assert c[0, 0] == pytest.approx(4 * 2.5)
    c[0, 0] = 0
    assert np.allclose(c, 0, atol=1e-12)


def test_single_atom_round_trip():
    coeffs = np.zeros((6, 5))
    coeffs[2, 3] = 1.0
    grid = dct_inverse(SparseCoefficients(coeffs.ravel(order="F"), (6, 5)))
    back = dct_forward(grid).as_array()
    assert np.allclose(back, coeffs, atol=1e-12)


def test_inverse_examples():
    zero = SparseCoefficients(np.zeros(12), (3, 4))
    assert np.all(dct_inverse(zero) == 0)
    dc = np.zeros(12)
    dc[0] = 1.5 * np.sqrt(12)
    assert np.allclose(dct_inverse(SparseCoefficients(dc, (3, 4))), 1.5)


def test_coefficients_vectorized_column_major():
    x = np.arange(6.0).reshape(2, 3)
    sc = dct_forward(x)
    assert np.array_equal(sc.values, sc.as_array().ravel(order="F"))
    assert sc.nnz == np.count_nonzero(sc.values)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 24),
    st.integers(1, 24),
    st.integers(0, 2**32 - 1),
)
def test_round_trip_and_parseval(n0, n1, seed):
    x = np.random.default_rng(seed).normal(size=(n0, n1))
    c = dct_forward(x)
    assert np.linalg.norm(c.values) == pytest.approx(np.linalg.norm(x), rel=1e-10)
    back = dct_inverse(c)
    assert np.linalg.norm(back - x) <= 1e-10 * np.linalg.norm(x)


def test_empty_grid_rejected():
    with pytest.raises(InvalidInputError):
        dct_forward(np.zeros((0, 3)))


def test_measurement_set_validation():
    with pytest.raises(InvalidInputError):
        MeasurementSet([0, 0], [1, 2], (2, 2))
    with pytest.raises(InvalidInputError):
        MeasurementSet([0, 4], [1, 2], (2, 2))
    with pytest.raises(InvalidInputError):
        MeasurementSet([0, 1], [1], (2, 2))
    with pytest.raises(InvalidInputError):
        MeasurementSet([0, 1], [1, np.nan], (2, 2))
    m = MeasurementSet.from_unsorted([3, 1], [30.0, 10.0], (2, 2))
    assert m.indices.tolist() == [1, 3] and m.values.tolist() == [10.0, 30.0]
    assert MeasurementSet.from_dict(m.to_dict()).indices.tolist() == [1, 3]


def test_solver_config_validation():
    with pytest.raises(InvalidInputError):
        SolverConfig(tolerance=0)
    with pytest.raises(InvalidInputError):
        SolverConfig(max_iters=0)
    with pytest.raises(InvalidInputError):
        SolverConfig(lam=-1)


def test_full_sampling_reproduces_grid():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(10, 12))
    meas = MeasurementSet.from_grid(x, np.arange(x.size))
    res = reconstruct(meas, SolverConfig(lam=1e-8))
    assert nrmse(x, res.grid) < 1e-4


def test_synthetic_sparse_recovery():
    truth = synthetic(5)
    idx = sample_uniform(truth.size, 0.15, 5)
    res = reconstruct(MeasurementSet.from_grid(truth, idx))
    assert res.converged
    assert nrmse(truth, res.grid) < 0.01


def test_zero_measurements_give_zero_grid():
    res = reconstruct(MeasurementSet([1, 5, 7], [0.0, 0.0, 0.0], (4, 4)))
    assert np.all(res.grid == 0)
    assert res.converged


def test_feasibility_bound():
    truth = synthetic(11, shape=(32, 32), atoms=6)
    idx = sample_uniform(truth.size, 0.3, 11)
    meas = MeasurementSet.from_grid(truth, idx)
    cfg = SolverConfig()
    res = reconstruct(meas, cfg)
    fit = res.grid.ravel(order="F")[meas.indices]
    bound = max(10 * res.lam * np.sqrt(len(meas)), 10 * cfg.tolerance * np.linalg.norm(meas.values))
    assert np.linalg.norm(fit - meas.values) <= bound


def test_reconstruction_deterministic():
    truth = synthetic(2, shape=(24, 24), atoms=5)
    meas = MeasurementSet.from_grid(truth, sample_uniform(truth.size, 0.2, 2))
    a = reconstruct(meas)
    b = reconstruct(meas)
    assert a.grid.tobytes() == b.grid.tobytes()


def test_backtracking_variant_also_recovers():
    truth = synthetic(4, shape=(32, 32), atoms=5)
    meas = MeasurementSet.from_grid(truth, sample_uniform(truth.size, 0.25, 4))
    res = reconstruct(meas, SolverConfig(step_backtracking=True))
    assert nrmse(truth, res.grid) < 0.01


def test_nonconvergence_reported_not_raised():
    truth = synthetic(6, shape=(32, 32))
    meas = MeasurementSet.from_grid(truth, sample_uniform(truth.size, 0.1, 6))
    res = reconstruct(meas, SolverConfig(max_iters=3))
    assert not res.converged
    assert np.all(np.isfinite(res.grid))


def test_more_samples_do_not_hurt_statistically():
    low, high = [], []
    for s in range(8):
        truth = synthetic(100 + s, shape=(32, 32), atoms=10)
        for frac, bucket in ((0.05, low), (0.25, high)):
            meas = MeasurementSet.from_grid(truth, sample_uniform(truth.size, frac, s))
            bucket.append(nrmse(truth, reconstruct(meas).grid))
    assert np.median(high) <= np.median(low)


def test_sparsity_examples():
    atom = np.zeros((16, 16))
    atom[3, 4] = 1.0
    assert sparsity_fraction(DctPlan((16, 16)).inverse(atom)) == pytest.approx(1 / 256)
    noise = np.random.default_rng(0).normal(size=(32, 32))
    # oracle: sort-and-accumulate on the dense-matrix transform
    e = np.sort(dense_dct2(noise).ravel() ** 2)[::-1]
    k = int(np.searchsorted(np.cumsum(e) / e.sum(), 0.99) + 1)
    frac = sparsity_fraction(noise)
    assert frac == pytest.approx(k / noise.size)
    assert frac > 0.5


def test_sparsity_rejects_bad_energy():
    with pytest.raises(InvalidInputError):
        sparsity_fraction(np.ones((3, 3)), 0.0)
