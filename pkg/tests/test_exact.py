"""Exact-diagonalization oracle, reduced density matrices, thermal MEVs."""

import numpy as np
import pytest

from spinmotif.exact import (
    build_hamiltonian,
    calibrate_beta,
    cft_mev,
    cft_thermal_weights,
    cumulative_class_mass,
    entanglement_hamiltonian,
    entanglement_spectrum,
    exact_mev,
    gap_estimate,
    ground_state,
    reduced_density_matrix,
    truncation_size,
)
from spinmotif.motif import all_motifs, conjugate, motif_index, motif_vector
from spinmotif.spinchain import enumerate_basis, partition_classes


def heisenberg_e0(n):
    """Independent oracle: dense Sz-basis Heisenberg chain, converted through
    E = 2*E_Heis + N/2 for the exchange model."""
    dim = 2**n
    h = np.zeros((dim, dim))
    for state in range(dim):
        bits = [(state >> i) & 1 for i in range(n)]
        for i in range(n):
            j = (i + 1) % n
            if bits[i] == bits[j]:
                h[state, state] += 0.25
            else:
                h[state, state] -= 0.25
                flipped = state ^ (1 << i) ^ (1 << j)
                h[flipped, state] += 0.5
    e_heis = np.linalg.eigvalsh(h)[0]
    return 2.0 * e_heis + n / 2.0


@pytest.mark.parametrize("n", [4, 6, 8])
def test_ground_state_against_spin_basis_oracle(n):
    gs = ground_state(n, 2)
    assert gs.e0 == pytest.approx(heisenberg_e0(n), abs=1e-10)
    assert gs.residual < 1e-9


def test_known_small_energies():
    assert ground_state(4, 2).e0 == pytest.approx(-2.0, abs=1e-10)
    # three-species Sutherland point at N=6
    gs3 = ground_state(6, 3)
    assert gs3.e0 < 0


def test_gauge_invariance_of_spectrum():
    plain = ground_state(8, 2, gauge=False)
    gauged = ground_state(8, 2, gauge=True)
    assert gauged.e0 == pytest.approx(plain.e0, abs=1e-12)
    assert gauged.emax == pytest.approx(plain.emax, abs=1e-12)
    # gauged ground state is strictly positive (Perron-Frobenius)
    assert (gauged.amplitudes > 0).all()
    # physical amplitudes agree up to overall sign
    a, b = plain.amplitudes, gauged.physical_amplitudes()
    assert min(np.abs(a - b).max(), np.abs(a + b).max()) < 1e-9


def test_lanczos_path_matches_dense():
    dense = ground_state(10, 2, gauge=True)
    lanczos = ground_state(10, 2, gauge=True, dense_cap=10)
    assert lanczos.solver == "lanczos"
    assert lanczos.e0 == pytest.approx(dense.e0, abs=1e-10)
    assert lanczos.emax == pytest.approx(dense.emax, abs=1e-10)
    assert lanczos.residual < 1e-9


def test_hamiltonian_is_symmetric_and_row_sums():
    basis = enumerate_basis(8, 2)
    h = build_hamiltonian(basis).toarray()
    assert np.array_equal(h, h.T)
    # exchange model: every column sums to N (P is doubly stochastic per bond)
    assert np.allclose(h.sum(axis=0), 8.0)


def test_reduced_density_matrix_properties():
    gs = ground_state(8, 2, gauge=True)
    for k in (2, 3, 4):
        rdm = reduced_density_matrix(gs, k)
        assert np.trace(rdm.rho) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(rdm.rho, rdm.rho.T, atol=1e-12)
        assert np.linalg.eigvalsh(rdm.rho).min() > -1e-12


def test_mev_probability_and_count_conventions():
    gs = ground_state(8, 2, gauge=True)
    prob = exact_mev(gs, 3)
    cnt = exact_mev(gs, 3, counts=True)
    assert sum(prob.values()) == pytest.approx(1.0, abs=1e-12)
    for mo in prob:
        assert cnt[mo] == pytest.approx(8 * prob[mo], abs=1e-12)
        # conjugation symmetry of the zero-magnetization ground state
        assert prob[conjugate(mo)] == pytest.approx(prob[mo], abs=1e-12)


def test_mev_matches_direct_window_average():
    gs = ground_state(8, 2, gauge=True)
    amps = gs.physical_amplitudes()
    mev = exact_mev(gs, 2)
    direct = np.zeros(4)
    for s, a in zip(gs.basis, amps):
        direct += a * a * motif_vector(s, 2, 2) / 8.0
    for mo, val in mev.items():
        assert val == pytest.approx(direct[motif_index(mo, 2)], abs=1e-12)


def test_entanglement_spectrum_ascending_and_normalized():
    gs = ground_state(10, 2, gauge=True)
    spec = entanglement_spectrum(reduced_density_matrix(gs, 4))
    assert (np.diff(spec) >= 0).all()
    assert np.exp(-spec).sum() == pytest.approx(1.0, abs=1e-9)


def test_truncation_size_edges():
    w = np.array([0.5, 0.3, 0.15, 0.05])
    assert truncation_size(w, 0.5) == 1
    assert truncation_size(w, 0.8) == 2
    assert truncation_size(w, 1.0) == 4
    assert truncation_size(np.array([0.4, 0.3, 0.3]), 0.7) == 2
    with pytest.raises(ValueError):
        truncation_size(w, 0.0)
    with pytest.raises(ValueError):
        truncation_size(np.array([-0.1, 1.1]), 0.5)


def test_entanglement_hamiltonian_structure():
    h = entanglement_hamiltonian(3)
    assert np.array_equal(h, h.T)
    # bond weights i(K-i)/K for the open 3-site window: 2/3, 2/3
    assert h[motif_index((0, 0, 0), 2), motif_index((0, 0, 0), 2)] == pytest.approx(4 / 3)
    # relabeling symmetry of the thermal diagonal
    diag = cft_mev(3, 1.0)
    for mo in all_motifs(2, 3):
        assert diag[mo] == pytest.approx(diag[conjugate(mo)], abs=1e-12)
        assert diag[mo] == pytest.approx(diag[mo[::-1]], abs=1e-12)
    assert sum(diag.values()) == pytest.approx(1.0, abs=1e-12)


def test_thermal_weights_normalized():
    w = cft_thermal_weights(4, 2.0)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert (w > 0).all()


def test_calibrate_beta_recovers_planted_value():
    target = cft_mev(3, 1.3)
    beta = calibrate_beta(3, target)
    assert beta == pytest.approx(1.3, abs=1e-6)


def test_cumulative_class_mass_bounds():
    gs = ground_state(8, 2, gauge=True)
    part = partition_classes(gs.basis, 2)
    c50 = cumulative_class_mass(gs, part, 0.5)
    c99 = cumulative_class_mass(gs, part, 0.99)
    assert 1 <= c50 <= c99 <= len(part)


def test_gap_estimate_positive():
    gs = ground_state(8, 2)
    assert gap_estimate(gs) > 0
    assert gap_estimate(gs) == pytest.approx((gs.emax - gs.e0) / 70)
