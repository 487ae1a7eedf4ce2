import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from cvqkd.errors import (
    DomainError,
    InvariantViolation,
    TruncationSaturationWarning,
    UnphysicalStateError,
)
from cvqkd.quantum import (
    FockDensityMatrix,
    GaussianStateCM,
    TruncationPolicy,
    accumulate_coherent_mixture,
    accumulate_coherent_projector,
    choose_cutoff,
    coherent_fock_amplitudes,
    fock_entropy,
    g_function,
    gaussian_entropy,
    log_factorial,
    poisson_entropy,
    poisson_pmf,
    thermal_cutoff,
)


class TestPoisson:
    def test_zero_count(self):
        assert poisson_pmf(0, 2.0) == pytest.approx(math.exp(-2), rel=1e-15)

    def test_degenerate(self):
        assert poisson_pmf(0, 0.0) == 1.0
        assert poisson_pmf(3, 0.0) == 0.0

    def test_three_counts(self):
        assert poisson_pmf(3, 2.0) == pytest.approx(math.exp(-2) * 8 / 6, rel=1e-13)
        assert poisson_pmf(3, 2.0) == pytest.approx(0.180447, abs=1e-6)

    def test_large_mean_no_overflow(self):
        assert poisson_pmf(400, 400.0) == pytest.approx(stats.poisson.pmf(400, 400.0), rel=1e-10)

    @pytest.mark.parametrize("n, mu", [(-1, 1.0), (1, -0.5), (1.5, 1.0)])
    def test_domain_errors(self, n, mu):
        with pytest.raises(DomainError):
            poisson_pmf(n, mu)

    @pytest.mark.parametrize("mu", [0.1, 1.0, 5.0, 20.0])
    def test_normalized_over_cutoff(self, mu):
        policy = TruncationPolicy()
        total = sum(poisson_pmf(n, mu) for n in range(choose_cutoff(mu, policy)))
        assert abs(total - 1.0) <= 1e-12 + policy.tail_mass

    def test_log_factorial_table(self):
        n = np.arange(200)
        assert np.allclose(log_factorial(n), [math.lgamma(k + 1) for k in n], rtol=1e-13)

    @pytest.mark.parametrize("mu", [0.0, 1e-3, 0.5, 2.0, 17.0, 300.0])
    def test_entropy_matches_scipy(self, mu):
        ref = stats.poisson.entropy(mu) / math.log(2) if mu > 0 else 0.0
        assert poisson_entropy(mu) == pytest.approx(ref, abs=1e-11)

    @given(st.lists(st.floats(0.0, 60.0), min_size=1, max_size=30))
    def test_entropy_vectorized_is_elementwise(self, mus):
        vec = poisson_entropy(np.array(mus))
        assert np.allclose(vec, [poisson_entropy(m) for m in mus], atol=1e-13, rtol=0)

    @given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
    def test_entropy_increasing(self, a, b):
        lo, hi = sorted((a, b))
        assert poisson_entropy(hi) >= poisson_entropy(lo) - 1e-12


class TestCutoffs:
    def test_floor(self):
        assert choose_cutoff(0.0) == 8

    def test_poisson_four(self):
        tail = 1e-10
        n = next(k for k in range(200) if stats.poisson.sf(k, 4.0) < tail)
        assert choose_cutoff(4.0, TruncationPolicy(tail_mass=tail)) == math.ceil(1.2 * (n + 1))

    def test_saturation_warns(self):
        with pytest.warns(TruncationSaturationWarning):
            assert choose_cutoff(1e6) == TruncationPolicy().max_cutoff

    def test_thermal_cutoff_captures_tail(self):
        for nbar in (0.5, 2.0, 6.0):
            dim = thermal_cutoff(nbar)
            assert (nbar / (nbar + 1)) ** dim < 1e-10

    @pytest.mark.parametrize("kwargs", [dict(tail_mass=0.0), dict(tail_mass=1.0),
                                        dict(max_cutoff=4), dict(safety_factor=0.9)])
    def test_policy_validation(self, kwargs):
        with pytest.raises(DomainError):
            TruncationPolicy(**kwargs)

    def test_negative_mu(self):
        with pytest.raises(DomainError):
            choose_cutoff(-1.0)


class TestCoherentAmplitudes:
    def test_vacuum(self):
        assert np.allclose(coherent_fock_amplitudes(0j, 4), [1, 0, 0, 0])

    def test_first_terms(self):
        assert np.allclose(coherent_fock_amplitudes(1 + 0j, 2), [math.exp(-0.5)] * 2)

    def test_norm_with_policy_cutoff(self):
        c = coherent_fock_amplitudes(2 + 0j, choose_cutoff(4.0))
        assert np.sum(np.abs(c) ** 2) >= 1 - 1e-10

    def test_phase(self):
        alpha = 1.3 * np.exp(0.7j)
        c = coherent_fock_amplitudes(alpha, 6)
        ref = [np.exp(-abs(alpha) ** 2 / 2) * alpha**n / math.sqrt(math.factorial(n)) for n in range(6)]
        assert np.allclose(c, ref, atol=1e-14)

    def test_bad_cutoff(self):
        with pytest.raises(DomainError):
            coherent_fock_amplitudes(1j, 0)

    @given(st.complex_numbers(max_magnitude=5.0), st.integers(1, 80))
    def test_norm_bounded(self, alpha, cutoff):
        c = coherent_fock_amplitudes(alpha, cutoff)
        assert np.sum(np.abs(c) ** 2) <= 1 + 1e-12


class TestFockDensityMatrix:
    def test_vacuum_projector(self):
        rho = accumulate_coherent_projector(FockDensityMatrix.zeros(5), 0j, 1.0)
        assert np.allclose(rho.matrix, FockDensityMatrix.vacuum(5).matrix)
        assert fock_entropy(rho) == 0.0

    def test_cat_mixture_eigenvalues(self):
        rho = FockDensityMatrix.zeros(40)
        rho = accumulate_coherent_projector(rho, 1 + 0j, 0.5)
        rho = accumulate_coherent_projector(rho, -1 + 0j, 0.5)
        lam = np.sort(np.linalg.eigvalsh(rho.matrix))[-2:]
        ref = np.sort([(1 - math.exp(-2)) / 2, (1 + math.exp(-2)) / 2])
        assert np.allclose(lam, ref, atol=1e-12)

    def test_mixture_trace(self):
        rng = np.random.default_rng(3)
        alphas = rng.normal(size=50) + 1j * rng.normal(size=50)
        w = rng.random(50)
        rho = accumulate_coherent_mixture(FockDensityMatrix.zeros(60), alphas, w / w.sum())
        rho.validate()
        assert 1 - 1e-10 <= rho.trace() <= 1 + 1e-12

    def test_maximally_mixed_qubit(self):
        assert fock_entropy(FockDensityMatrix(np.diag([0.5, 0.5]).astype(complex))) == pytest.approx(1.0)

    def test_thermal_entropy(self):
        assert fock_entropy(FockDensityMatrix.thermal(1.0, 64)) == pytest.approx(2.0, abs=1e-10)

    def test_non_hermitian_rejected(self):
        rho = FockDensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]], dtype=complex))
        with pytest.raises(InvariantViolation):
            fock_entropy(rho)
        with pytest.raises(InvariantViolation):
            rho.validate()

    def test_validate_trace_and_psd(self):
        with pytest.raises(InvariantViolation):
            FockDensityMatrix(np.diag([0.7, 0.7]).astype(complex)).validate()
        with pytest.raises(InvariantViolation):
            FockDensityMatrix(np.diag([1.2, -0.2]).astype(complex)).validate()

    def test_normalized_records_discard(self):
        rho = FockDensityMatrix(np.diag([0.6, 0.3]).astype(complex)).normalized()
        assert rho.trace() == pytest.approx(1.0)
        assert rho.discarded == pytest.approx(0.1)

    def test_negative_weight(self):
        with pytest.raises(DomainError):
            accumulate_coherent_projector(FockDensityMatrix.zeros(3), 0j, -1.0)

    @given(st.lists(st.tuples(st.complex_numbers(max_magnitude=2.5), st.floats(0.01, 1.0)),
                    min_size=1, max_size=8))
    def test_entropy_nonnegative_and_bounded(self, parts):
        alphas, w = zip(*parts)
        w = np.array(w) / sum(w)
        rho = accumulate_coherent_mixture(FockDensityMatrix.zeros(40), alphas, w).normalized()
        s = fock_entropy(rho)
        assert -1e-12 <= s <= math.log2(len(parts)) + 1e-9


class TestGaussian:
    def test_g_values(self):
        assert g_function(0.0) == 0.0
        assert g_function(1.0) == 2.0
        assert g_function(2.0) == pytest.approx(3 * math.log2(3) - 2, abs=1e-14)

    def test_g_domain(self):
        with pytest.raises(DomainError):
            g_function(-0.1)

    def test_g_increasing_concave(self):
        grid = np.linspace(0, 10, 201)
        vals = np.array([g_function(v) for v in grid])
        assert np.all(np.diff(vals) > 0)
        assert np.all(np.diff(vals, 2) < 0)

    def test_vacuum_and_thermal(self):
        assert gaussian_entropy(GaussianStateCM()) == 0.0
        assert gaussian_entropy(GaussianStateCM.coherent(1 + 2j)) == 0.0
        assert gaussian_entropy(GaussianStateCM(cov=np.diag([3.0, 3.0]))) == pytest.approx(2.0)

    def test_single_quadrature_mixture(self):
        s = gaussian_entropy(GaussianStateCM(cov=np.diag([1.0, 5.0])))
        assert s == pytest.approx(g_function((math.sqrt(5) - 1) / 2), abs=1e-14)
        assert s == pytest.approx(1.552372, abs=1e-6)

    def test_unphysical(self):
        with pytest.raises(UnphysicalStateError):
            gaussian_entropy(GaussianStateCM(cov=np.diag([0.5, 1.0])))

    def test_coherent_mean_convention(self):
        state = GaussianStateCM.coherent(0.5 - 1j)
        assert np.allclose(state.mean, [1.0, -2.0])
        assert state.mean_photon_number() == pytest.approx(abs(0.5 - 1j) ** 2)

    @pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0, 4.0])
    def test_thermal_fock_agreement(self, nbar):
        fock = fock_entropy(FockDensityMatrix.thermal(nbar, thermal_cutoff(nbar)))
        assert abs(fock - gaussian_entropy(GaussianStateCM.thermal(nbar))) <= 1e-4

    @pytest.mark.parametrize("var", [0.5, 1.0, 2.0])
    def test_quadrature_mixture_fock_agreement(self, var):
        t, w = np.polynomial.hermite_e.hermegauss(120)
        alphas = 1j * math.sqrt(var) * t
        nbar = var
        rho = accumulate_coherent_mixture(FockDensityMatrix.zeros(thermal_cutoff(nbar) + 20),
                                          alphas, w / w.sum())
        fock = fock_entropy(rho.normalized())
        gauss = gaussian_entropy(GaussianStateCM(cov=np.diag([1.0, 1.0 + 4 * var])))
        assert abs(fock - gauss) <= 1e-4

    @given(st.floats(0.0, 20.0))
    def test_entropy_of_thermal_cov(self, nbar):
        assert gaussian_entropy(GaussianStateCM.thermal(nbar)) == pytest.approx(g_function(nbar), abs=1e-9)


def test_no_warning_on_default_cutoffs():
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationSaturationWarning)
        choose_cutoff(50.0)
        thermal_cutoff(8.0)
