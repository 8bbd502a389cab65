import warnings

import numpy as np
import pytest

from covdist.errors import (
    DimMismatch,
    ModelError,
    NonPositiveEigenvalue,
    NonPositiveMultiplicity,
    NotHermitian,
    NotPositiveDefinite,
    RhoOutOfRange,
    SampleSizeEqualsDim,
    UnsortedOrDuplicateEigenvalues,
)
from covdist.spectrum import (
    ConditioningWarning,
    CovarianceModel,
    diagonal_model,
    haar_basis,
    make_spectral_model,
    multiplicities_from_fractions,
    projector_overlaps,
    spectral_model_from_dense,
    toeplitz_covariance,
    with_haar_basis,
)


def test_four_eigenvalue_model():
    m = make_spectral_model([1, 6, 15, 25], [1, 2, 3, 4], 15)
    assert m.dim == 10
    assert m.n_distinct == 4
    assert m.oversampled and m.regime == "oversampled"
    assert m.ratio == pytest.approx(10 / 15)


def test_white_model():
    m = make_spectral_model([1.0], [8], 16)
    assert m.n_distinct == 1 and m.dim == 8


@pytest.mark.parametrize(
    "eigs, mults, n, exc",
    [
        ([1, 6, 15, 25], [1, 2, 3, 4], 10, SampleSizeEqualsDim),
        ([0, 1], [1, 1], 5, NonPositiveEigenvalue),
        ([-1, 1], [1, 1], 5, NonPositiveEigenvalue),
        ([2, 1], [1, 1], 5, UnsortedOrDuplicateEigenvalues),
        ([1, 1 + 1e-10], [1, 1], 5, UnsortedOrDuplicateEigenvalues),
        ([1, 2], [0, 1], 5, NonPositiveMultiplicity),
        ([1, 2], [1.5, 1], 5, NonPositiveMultiplicity),
        ([1, 2], [1], 5, ModelError),
        ([], [], 5, ModelError),
    ],
)
def test_invalid_models(eigs, mults, n, exc):
    with pytest.raises(exc):
        make_spectral_model(eigs, mults, n)


def test_model_errors_are_value_errors():
    with pytest.raises(ValueError):
        make_spectral_model([1], [3], 3)


def test_conditioning_warning_near_unit_ratio():
    with pytest.warns(ConditioningWarning):
        make_spectral_model([1.0], [1000], 1001)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        make_spectral_model([1.0], [10], 20)


def test_model_is_immutable():
    m = make_spectral_model([1, 2], [1, 1], 5)
    with pytest.raises(ValueError):
        m.eigenvalues[0] = 3.0
    with pytest.raises(AttributeError):
        m.sample_size = 7


def test_with_sample_size_and_scaled():
    m = make_spectral_model([1, 2], [1, 1], 5)
    assert m.with_sample_size(1).regime == "undersampled"
    np.testing.assert_allclose(m.scaled(3).eigenvalues, [3, 6])
    np.testing.assert_array_equal(m.expanded_eigenvalues(), [1, 2])


def test_multiplicities_from_fractions():
    np.testing.assert_array_equal(multiplicities_from_fractions([0.1, 0.2, 0.3, 0.4], 60), [6, 12, 18, 24])
    with pytest.raises(ModelError):
        multiplicities_from_fractions([0.1, 0.2, 0.3, 0.4], 15)
    with pytest.raises(ModelError):
        multiplicities_from_fractions([0.5, 0.6], 10)


def test_dense_exact_diagonal():
    c = spectral_model_from_dense(np.diag([1.0, 1.0, 2.0]), 10, cluster_tol=1e-9)
    np.testing.assert_allclose(c.eigenvalues, [1, 2])
    np.testing.assert_array_equal(c.multiplicities, [2, 1])


def test_dense_identity():
    c = spectral_model_from_dense(np.eye(5), 10)
    np.testing.assert_allclose(c.eigenvalues, [1.0])
    np.testing.assert_array_equal(c.multiplicities, [5])


def test_dense_toeplitz_four_distinct():
    t = toeplitz_covariance(0.75, 4, 10)
    assert t.spectrum.n_distinct == 4
    np.testing.assert_array_equal(t.multiplicities, [1, 1, 1, 1])
    dense = np.array([[0.75 ** abs(i - j) for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(t.eigenvalues, np.linalg.eigvalsh(dense), rtol=1e-12)


def test_dense_rejects_bad_input():
    with pytest.raises(NotHermitian):
        spectral_model_from_dense(np.array([[1.0, 0.5], [0.0, 1.0]]), 5)
    with pytest.raises(NotPositiveDefinite):
        spectral_model_from_dense(np.diag([1.0, -1.0]), 5)
    with pytest.raises(NotHermitian):
        spectral_model_from_dense(np.ones((2, 3)), 5)


def test_dense_roundtrip_is_idempotent():
    spec = make_spectral_model([0.5, 2.0, 7.0], [2, 3, 1], 12)
    c = with_haar_basis(spec, seed=4)
    again = spectral_model_from_dense(c.matrix(), 12)
    np.testing.assert_allclose(again.eigenvalues, spec.eigenvalues, rtol=1e-10)
    np.testing.assert_array_equal(again.multiplicities, spec.multiplicities)


def test_toeplitz_examples():
    np.testing.assert_allclose(toeplitz_covariance(0.0, 3, 6).matrix(), np.eye(3), atol=1e-14)
    t = toeplitz_covariance(0.75, 3, 6).matrix()
    np.testing.assert_allclose(t[0], [1, 0.75, 0.5625], atol=1e-12)
    assert np.all(toeplitz_covariance(0.9, 50, 100).eigenvalues > 0)
    with pytest.raises(RhoOutOfRange):
        toeplitz_covariance(1.0, 3, 6)
    with pytest.raises(RhoOutOfRange):
        toeplitz_covariance(-0.1, 3, 6)


@pytest.mark.parametrize("field", ["real", "complex"])
def test_haar_basis_orthonormal_and_deterministic(field):
    u = haar_basis(4, field, seed=7)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    np.testing.assert_array_equal(u, haar_basis(4, field, seed=7))
    assert np.isrealobj(u) == (field == "real")
    assert haar_basis(1, field, seed=2).shape == (1, 1)


def test_haar_average_overlaps_match_monte_carlo():
    spec = make_spectral_model([1, 2, 3, 4], [8, 16, 16, 24], 100)
    ref = diagonal_model(spec)
    acc = np.zeros((4, 4))
    for s in range(500):
        acc += projector_overlaps(ref, with_haar_basis(spec, seed=1000 + s)).entries
    np.testing.assert_allclose(acc / 500, projector_overlaps(spec, spec, "haar-average").entries, rtol=0.05)


def test_covariance_model_invariants():
    spec = make_spectral_model([1, 6, 15, 25], [1, 2, 3, 4], 15)
    c = with_haar_basis(spec, seed=5)
    total = sum(c.projector(k) for k in range(4))
    np.testing.assert_allclose(total, np.eye(10), atol=1e-12)
    r = c.matrix()
    np.testing.assert_allclose(r, r.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(r).min() > 0
    np.testing.assert_allclose(c.sqrt() @ c.sqrt(), r, atol=1e-10)
    assert [b.shape[1] for b in c.blocks()] == [1, 2, 3, 4]


def test_covariance_model_rejects_bad_basis():
    spec = make_spectral_model([1, 2], [1, 1], 5)
    with pytest.raises(ModelError):
        CovarianceModel(spec, np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(DimMismatch):
        CovarianceModel(spec, np.eye(3))


def test_identical_bases_give_diagonal_overlaps():
    spec = make_spectral_model([1, 6, 15, 25], [1, 2, 3, 4], 15)
    c = with_haar_basis(spec, seed=1)
    w = projector_overlaps(c, c).entries
    np.testing.assert_allclose(w, np.diag([1, 2, 3, 4]), atol=1e-12)


def test_haar_average_formula():
    a = make_spectral_model([1, 6, 15, 25], [1, 2, 3, 4], 15)
    b = make_spectral_model([1, 6, 15, 25], [2, 2, 2, 4], 15)
    w = projector_overlaps(a, b, "haar-average")
    assert w.mode == "haar-average"
    assert w.entries[0, 0] == pytest.approx(0.2)
    np.testing.assert_allclose(w.T.entries, w.entries.T)


def test_explicit_overlap_sums_large():
    a = with_haar_basis(make_spectral_model([1, 2, 5], [50, 70, 80], 400), seed=1)
    b = toeplitz_covariance(0.5, 200, 300)
    w = projector_overlaps(a, b).entries
    assert np.all(w >= -1e-14)
    np.testing.assert_allclose(w.sum(axis=1), a.multiplicities, atol=1e-10)
    np.testing.assert_allclose(w.sum(axis=0), b.multiplicities, atol=1e-10)


def test_overlap_errors():
    a = make_spectral_model([1, 2], [1, 1], 5)
    b = make_spectral_model([1, 2], [1, 2], 5)
    with pytest.raises(DimMismatch):
        projector_overlaps(a, b, "haar-average")
    with pytest.raises(ModelError):
        projector_overlaps(a, a, "explicit")
    with pytest.raises(ValueError):
        projector_overlaps(a, a, "bogus")
