import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvstrain.hamiltonian import (
    GAMMA_E_MHZ_PER_G,
    LifetimeModel,
    SpinHamiltonian,
    build,
    effective_lifetimes,
    eigensolve,
    field_sweep,
    hamiltonian_matrix,
    transition_frequencies,
    upper_pair_splitting,
)
from nvstrain.presets import PRESETS
from nvstrain.strain import HamiltonianCouplings

from oracles import charpoly_eigenvalues


mag = st.floats(0.0, 2.0)
phase = st.floats(-np.pi, np.pi)
field = st.floats(-1000.0, 1000.0)
couplings = st.builds(HamiltonianCouplings.from_moduli, st.floats(0.1, 3.0), mag, mag, phase, phase)


def test_unstrained_levels():
    sol = eigensolve(build(HamiltonianCouplings(1.42), 100.0))
    z = GAMMA_E_MHZ_PER_G * 1e-3 * 100.0
    np.testing.assert_allclose(np.sort(sol.energies), np.sort([0.0, 1.42 - z, 1.42 + z]), atol=1e-12)
    assert sol.mixing[sol.bright] == pytest.approx(1.0)


def test_e2_only_splits_pm_pair_by_twice_e2():
    sol = eigensolve(build(HamiltonianCouplings(0.8, 0.0, 1.19)))
    assert upper_pair_splitting(sol) == pytest.approx(2 * 1.19)
    assert sol.energies[sol.bright] == pytest.approx(0.0, abs=1e-12)


def test_matrix_layout():
    h = hamiltonian_matrix(1.0, 0.1 + 0.2j, 0.3 - 0.1j, 0.0)
    expected = np.array(
        [[1.0, 0.1 + 0.2j, 0.3 - 0.1j], [0.1 - 0.2j, 0.0, -0.1 - 0.2j], [0.3 + 0.1j, -0.1 + 0.2j, 1.0]]
    )
    np.testing.assert_allclose(h, expected)


def test_transition_frequencies_are_positive_spacings():
    sol = eigensolve(build(PRESETS["site-IV"].es_couplings, 40.0))
    trans = transition_frequencies(sol)
    assert len(trans) == 3
    assert all(t.frequency >= 0 for t in trans)
    e = sol.energies
    assert trans[-1].frequency == pytest.approx(e[2] - e[1])


def test_lifetimes_for_pure_states():
    lm = LifetimeModel(132.0, 32.0, 357.0)
    sol = eigensolve(build(HamiltonianCouplings(0.85), 300.0))
    tau = effective_lifetimes(sol, lm)
    assert tau[sol.bright] == pytest.approx(1000.0 / 164.0)
    assert sorted(tau)[:2] == pytest.approx([1000.0 / 489.0] * 2)


def test_zero_rates_rejected():
    with pytest.raises(ValueError):
        effective_lifetimes(eigensolve(build(HamiltonianCouplings(1.0))), LifetimeModel(0.0, 0.0, 0.0))


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        LifetimeModel(-1.0, 1.0, 1.0)


def test_bad_shape_rejected():
    with pytest.raises(ValueError):
        eigensolve(np.eye(2))


def test_nonfinite_field_rejected():
    with pytest.raises(ValueError):
        build(HamiltonianCouplings(1.0), np.inf)


def test_degenerate_order_is_deterministic():
    sol = eigensolve(np.diag([1.0, 1.0, 1.0]).astype(complex))
    assert sol.bright == 0 and sol.mixing[0] == 1.0


@settings(max_examples=300, deadline=None)
@given(couplings, field)
def test_hermitian_and_matches_oracle(c, bz):
    h = SpinHamiltonian(c, bz).matrix
    np.testing.assert_allclose(h, h.conj().T, atol=0)
    sol = eigensolve(h)
    np.testing.assert_allclose(sol.energies, charpoly_eigenvalues(h), atol=1e-9)
    # ties closer than 1e-12 GHz are ordered by |0> weight instead
    assert np.all(np.diff(sol.energies) >= -1e-12)


@settings(max_examples=200, deadline=None)
@given(couplings, field)
def test_eigenvectors_orthonormal_and_mixing_normalized(c, bz):
    sol = eigensolve(build(c, bz))
    v = sol.vectors
    np.testing.assert_allclose(v.conj().T @ v, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(sol.weights.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(sol.weights.sum(axis=1), 1.0, atol=1e-12)
    assert sol.mixing.sum() == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(couplings, st.lists(field, min_size=1, max_size=8))
def test_sweep_matches_pointwise(c, fields):
    sweep = field_sweep(c, np.array(fields), LifetimeModel(150.0, 2.0, 282.0))
    for k, bz in enumerate(fields):
        sol = eigensolve(build(c, bz))
        order = sol.label_order
        np.testing.assert_allclose(sweep.mixing[k], sol.mixing[order], atol=1e-9)
        np.testing.assert_allclose(np.sort(sweep.energies[k]), sol.energies, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 3.0), mag, mag, field)
def test_field_reversal_with_real_phases_keeps_spectrum(d, e1, e2, bz):
    # swapping |+1> and |-1> maps B to -B when the couplings are real
    a = eigensolve(build(HamiltonianCouplings(d, e1, e2), bz))
    b = eigensolve(build(HamiltonianCouplings(d, -e1, e2), -bz))
    np.testing.assert_allclose(a.energies, b.energies, atol=1e-10)
    np.testing.assert_allclose(np.sort(a.mixing), np.sort(b.mixing), atol=1e-9)
