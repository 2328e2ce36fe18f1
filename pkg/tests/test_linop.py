import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from osmoflow.core import InvalidStateError, PhysParams, collocation_grids
from osmoflow.equilibria import null_space_basis
from osmoflow.linop import (InadmissibleStateError, ModeState, assemble_mode_operator, eigen_spectrum,
                            kernel_vectors, quadratic_form, quadratic_form_closed,
                            random_admissible_state, remove_kernel_component,
                            semisimplicity_check, spectrum_report)

P0 = PhysParams()
N_TEST = 64


@pytest.fixture(scope="module")
def grids():
    return collocation_grids(N_TEST, P0.R_container)


@pytest.fixture(scope="module")
def ops(grids):
    return {k: assemble_mode_operator(k, P0, grids) for k in range(-4, 9)}


@pytest.fixture(scope="module")
def report():
    return spectrum_report(P0, n=N_TEST, k_max=8)


def test_rejects_non_reference_params():
    with pytest.raises(InvalidStateError):
        assemble_mode_operator(2, PhysParams(ctilde_plus=3.0), n=16)


class TestKernelVectors:
    @pytest.mark.parametrize("idx", [0, 1])
    def test_radial_basis_annihilated(self, ops, grids, idx):
        e = null_space_basis(P0, grids)[idx]
        op = ops[0]
        assert op.is_admissible(e)
        out = op.apply(e)
        tol = 1e-13 * np.abs(op.matrix).max()  # rounding of second-derivative matrices
        assert np.abs(out.mu_plus).max() < tol and np.abs(out.mu_minus).max() < tol
        assert abs(out.rho) < 1e-12

    @pytest.mark.parametrize("k", [1, -1])
    def test_translation_annihilated_exactly(self, ops, grids, k):
        e = null_space_basis(P0, grids)[2 if k == 1 else 3]
        out = ops[k].apply(e)
        assert np.abs(out.mu_plus).max() == 0 and np.abs(out.mu_minus).max() == 0
        assert out.rho == 0
        assert ops[k].v_k == 0

    def test_kernel_eigenvectors_span_basis(self, ops, grids):
        op = ops[0]
        lam, V = kernel_vectors(op)
        assert len(lam) == 2
        span = np.column_stack([op.full_vector(op.expand(V[:, j])) for j in range(2)])
        basis = np.column_stack([op.full_vector(e) for e in null_space_basis(P0, grids)[:2]])
        angles = scipy.linalg.subspace_angles(span, basis)
        assert np.max(angles) < 1e-6


class TestSpectrum:
    def test_kernel_dimensions(self, report):
        assert report.kernel_dimension == 4
        assert report.kernel_by_mode[0] == 2
        assert report.kernel_by_mode[1] == report.kernel_by_mode[-1] == 1
        assert all(v == 0 for k, v in report.kernel_by_mode.items() if abs(k) >= 2)
        assert report.passed and report.gap > 0

    def test_gap_value(self, report):
        # mode 1 carries the slowest nonzero decay at default parameters
        assert report.gap == pytest.approx(0.627275, rel=1e-5)

    def test_mode_two_real_negative(self, report):
        ev = report.modes[2].eigenvalues
        assert np.all(ev.real < 0)
        assert np.abs(ev.imag).max() < 1e-8

    def test_imaginary_parts_bounded(self, report):
        for sp in report.modes.values():
            ev = sp.eigenvalues
            assert np.all(np.abs(ev.imag) <= 1e-8 * np.maximum(1, np.abs(ev.real)))

    def test_symmetry_in_k(self, ops):
        for k in (2, 3, 4):
            a = eigen_spectrum(ops[k]).eigenvalues
            b = eigen_spectrum(ops[-k]).eigenvalues
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)

    def test_monotone_confinement(self, report):
        tops = [report.modes[k].eigenvalues.real.max() for k in range(2, 9)]
        assert np.all(np.diff(tops) < 0)

    def test_gap_refinement_stable(self):
        g1 = spectrum_report(P0, n=N_TEST, k_max=3).gap
        g2 = spectrum_report(P0, n=2 * N_TEST, k_max=3).gap
        assert abs(g1 - g2) / g2 < 5e-4

    def test_spurious_filter_keeps_sorted(self, ops):
        sp = eigen_spectrum(ops[3])
        assert sp.n_raw > len(sp.eigenvalues) > 0
        assert np.all(np.diff(sp.eigenvalues.real) <= 0)
        assert sp.refinement_delta < 1e-3

    def test_k_max_validation(self):
        with pytest.raises(InvalidStateError):
            spectrum_report(P0, n=16, k_max=1)


class TestQuadraticForm:
    @pytest.mark.parametrize("k", [0, 1, 2, 3, 5, 8])
    def test_nonnegative_on_random_states(self, ops, k):
        op = ops[k]
        rng = np.random.default_rng(1000 + k)
        for _ in range(1000):
            q = quadratic_form(op, random_admissible_state(op, rng))
            assert q.real >= -1e-10

    @settings(max_examples=30, deadline=None)
    @given(st.integers(-4, 8), st.integers(0, 2**32 - 1))
    def test_matches_closed_form(self, ops, k, seed):
        op = ops[k]
        w = random_admissible_state(op, np.random.default_rng(seed))
        q = quadratic_form(op, w)
        qc = quadratic_form_closed(op, w)
        assert q.real == pytest.approx(qc, rel=1e-7, abs=1e-8)
        assert abs(q.imag) <= 1e-7 * max(1.0, abs(q.real))

    def test_kernel_vector_zero(self, ops, grids):
        e = null_space_basis(P0, grids)[0]
        assert abs(quadratic_form(ops[0], e)) < 1e-9

    def test_rho_only_mode_two_inadmissible(self, ops, grids):
        gi, go = grids
        w = ModeState(2, np.zeros(gi.n), np.zeros(go.n), 1.0)
        assert not ops[2].is_admissible(w)
        with pytest.raises(InadmissibleStateError):
            quadratic_form(ops[2], w)

    def test_reduce_expand_round_trip(self, ops):
        op = ops[3]
        w = random_admissible_state(op, np.random.default_rng(5))
        back = op.expand(op.reduce(w))
        np.testing.assert_allclose(back.mu_minus, w.mu_minus, atol=1e-10)
        np.testing.assert_allclose(back.mu_plus, w.mu_plus, atol=1e-12)
        assert back.rho == w.rho

    def test_mismatched_state_rejected(self, ops):
        with pytest.raises(InvalidStateError):
            ops[2].reduce(ModeState(2, np.zeros(3), np.zeros(3), 0.0))


class TestSemisimplicity:
    def test_default_passes(self):
        res = semisimplicity_check(P0, n=N_TEST)
        assert res.passed and res.n_kernel_vectors == 4
        assert min(res.residuals.values()) > 0.1

    def test_shifted_operator_vacuous(self):
        res = semisimplicity_check(P0, n=N_TEST, shift=0.1)
        assert res.passed and res.n_kernel_vectors == 0 and not res.residuals


def test_remove_kernel_component(ops, grids):
    op = ops[0]
    e = op.reduce(null_space_basis(P0, grids)[0])
    w = op.reduce(random_admissible_state(op, np.random.default_rng(3)))
    x = remove_kernel_component(op, w + 5 * e)
    y = remove_kernel_component(op, w)
    np.testing.assert_allclose(x, y, atol=1e-8)
    np.testing.assert_allclose(remove_kernel_component(op, e), 0, atol=1e-9)
