import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from finite_cooling.errors import DomainError, NumericalError
from finite_cooling.goe import (
    GoeConfig,
    goe_sorted_spectra,
    jacobi_eigh,
    make_rng,
    mean_normalised_spacings,
    sample_goe_matrix,
    schedule_goe_eigenvalue,
    schedule_goe_spacing,
    symmetric_eigenvalues,
    symmetric_eigh,
)


def sym(a):
    return (a + a.T) / 2


class TestJacobi:
    @settings(max_examples=40)
    @given(st.integers(2, 12).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=st.floats(-100, 100))))
    def test_matches_lapack(self, a):
        M = sym(a)
        w_j = symmetric_eigenvalues(M, "jacobi")
        w_l = symmetric_eigenvalues(M, "lapack")
        scale = max(1.0, np.abs(M).max())
        assert np.allclose(w_j, w_l, atol=1e-11 * scale, rtol=0)

    def test_eigenvectors_diagonalise(self, rng):
        for n in (2, 5, 16):
            M = sample_goe_matrix(n, rng)
            w, V = jacobi_eigh(M)
            assert np.allclose(V.T @ V, np.eye(n), atol=1e-13)
            assert np.allclose(M @ V, V * w, atol=1e-12)

    def test_trace_identities(self, rng):
        M = sample_goe_matrix(9, rng)
        w = symmetric_eigenvalues(M, "jacobi")
        assert w.sum() == pytest.approx(np.trace(M), abs=1e-12)
        assert (w ** 2).sum() == pytest.approx((M ** 2).sum(), rel=1e-13)

    def test_descending(self, rng):
        w, _ = symmetric_eigh(sample_goe_matrix(8, rng))
        assert np.all(np.diff(w) <= 0)

    def test_degenerate_and_diagonal(self):
        assert np.allclose(symmetric_eigenvalues(np.eye(4), "jacobi"), 1.0)
        assert np.allclose(symmetric_eigenvalues(np.diag([3.0, -1.0, 2.0]), "jacobi"), [3, 2, -1])
        assert np.allclose(symmetric_eigenvalues(np.zeros((3, 3)), "jacobi"), 0.0)

    def test_auto_switches_to_lapack(self, rng):
        M = sample_goe_matrix(40, rng)
        assert np.allclose(symmetric_eigenvalues(M), np.sort(np.linalg.eigvalsh(M))[::-1])

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            symmetric_eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(DomainError):
            symmetric_eigh(np.ones((2, 3)))
        with pytest.raises(DomainError):
            symmetric_eigh(np.eye(2), method="qr")


class TestSampling:
    def test_entry_moments(self):
        rng = make_rng(7)
        X = np.array([sample_goe_matrix(3, rng) for _ in range(10_000)])
        # diagonal variance 2, off-diagonal variance 1, zero mean
        se = 4 / math.sqrt(10_000)
        assert abs(X[:, 0, 0].mean()) < 4 * math.sqrt(2 / 10_000)
        assert X[:, 0, 0].var() == pytest.approx(2.0, abs=2 * se * 2)
        assert X[:, 0, 1].var() == pytest.approx(1.0, abs=2 * se)
        assert np.all(X[:, 0, 1] == X[:, 1, 0])

    def test_semicircle_edge(self):
        spectra = goe_sorted_spectra(200, 20, make_rng(3))
        assert spectra[:, 0].mean() == pytest.approx(2.0, abs=0.1)
        assert spectra[:, -1].mean() == pytest.approx(-2.0, abs=0.1)
        assert np.all(np.diff(spectra, axis=1) <= 0)

    def test_determinism(self):
        a = goe_sorted_spectra(6, 30, make_rng(11, 5))
        b = goe_sorted_spectra(6, 30, make_rng(11, 5))
        c = goe_sorted_spectra(6, 30, make_rng(11, 6))
        assert np.array_equal(a, b)
        assert not np.allclose(a, c)

    def test_level_repulsion(self):
        s = mean_normalised_spacings(goe_sorted_spectra(30, 200, make_rng(1)))
        assert s.sum() == pytest.approx(1.0)
        # bulk spacings are narrower than edge spacings
        assert s[len(s) // 2] < s[0] and s[len(s) // 2] < s[-1]


class TestSchedules:
    def cfg(self, N=20, **kw):
        return GoeConfig(N=N, m=100, seed=4, **kw)

    def test_eigenvalue_schedule_boundaries_and_monotone(self):
        s = schedule_goe_eigenvalue(self.cfg())
        assert s.N == 20 and s.start == 1.0
        assert s.values[0] == 1.0 and s.values[-1] == 10.0
        assert np.all(np.diff(s.values) > 0)

    def test_eigenvalue_schedule_roughly_symmetric(self):
        s = schedule_goe_eigenvalue(GoeConfig(N=40, m=400, seed=2))
        mid = s.values[[19, 20]].mean()
        assert abs(mid - 5.5) < 0.5

    def test_spacing_schedule_boundaries(self):
        for rescale in ("affine", "cumulative"):
            s = schedule_goe_spacing(self.cfg(), rescale=rescale)
            assert s.values[0] == 1.0 and s.values[-1] == 10.0
            assert np.all(np.diff(s.values) >= 0)

    def test_cumulative_is_a_ramp(self):
        s = schedule_goe_spacing(GoeConfig(N=50, m=200, seed=9), rescale="cumulative")
        inc = np.diff(s.values)
        # increments lie within a modest factor of uniform
        assert inc.max() / inc.min() < 5

    def test_same_seed_same_schedule(self):
        a = schedule_goe_eigenvalue(self.cfg())
        b = schedule_goe_eigenvalue(self.cfg())
        assert np.array_equal(a.values, b.values)

    def test_shared_spectra(self):
        cfg = self.cfg()
        spectra = goe_sorted_spectra(21, 100, make_rng(4))
        assert np.array_equal(schedule_goe_eigenvalue(cfg, spectra=spectra).values,
                              schedule_goe_eigenvalue(cfg).values)
        with pytest.raises(DomainError):
            schedule_goe_eigenvalue(cfg, spectra=spectra[:, :-1])

    def test_config_validation(self):
        with pytest.raises(DomainError):
            GoeConfig(N=1)
        with pytest.raises(DomainError):
            GoeConfig(N=5, m=0)
        with pytest.raises(DomainError):
            schedule_goe_eigenvalue(GoeConfig(N=5))
        with pytest.raises(DomainError):
            schedule_goe_spacing(self.cfg(), rescale="log")

    def test_degenerate_ensemble(self):
        with pytest.raises(NumericalError):
            mean_normalised_spacings(np.zeros((3, 4)))
