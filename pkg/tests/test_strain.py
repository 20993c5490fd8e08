import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvstrain.strain import (
    NV_FRAME_ROTATION,
    CouplingModel,
    HamiltonianCouplings,
    StressTensor,
    couple,
    decompose,
    rotate_to_nv_frame,
)

finite = st.floats(-200.0, 200.0, allow_nan=False)
tensors = st.tuples(*[finite] * 6).map(StressTensor.from_array)
couplings = st.tuples(*[st.floats(-500.0, 500.0)] * 6).map(
    lambda g: CouplingModel(*g, d0_ghz=1.42)
)

MODEL = CouplingModel(g41=10.0, g43=-5.0, g15=30.0, g16=119.0, g25=12.0, g26=25.0, d0_ghz=1.42)


def test_zero_stress_gives_unstrained_terms():
    c = couple(StressTensor(), MODEL)
    assert c.d == pytest.approx(1.42)
    assert c.e1 == 0 and c.e2 == 0


def test_hydrostatic_only_shifts_d():
    c = couple(StressTensor.hydrostatic(10.0), MODEL)
    assert c.d == pytest.approx(1.42 + 1e-3 * (10.0 * 10.0 - 5.0 * 10.0))
    assert c.e1 == 0 and c.e2 == 0


def test_pure_shear_xz_activates_e1_and_e2_real():
    c = couple(StressTensor(xz=2.0), MODEL)
    assert c.d == pytest.approx(1.42)
    assert c.e1 == pytest.approx(1e-3 * 25.0 * 2.0)
    assert c.e2 == pytest.approx(1e-3 * 119.0 * 2.0)


def test_nonsymmetric_matrix_rejected():
    m = np.zeros((3, 3))
    m[0, 1] = 1.0
    with pytest.raises(ValueError):
        StressTensor.from_matrix(m)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        StressTensor(xx=np.nan)


def test_frame_rotation_is_orthonormal():
    r = NV_FRAME_ROTATION
    np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-15)
    assert np.linalg.det(r) == pytest.approx(1.0)


def test_hydrostatic_is_frame_invariant():
    s = rotate_to_nv_frame(StressTensor.hydrostatic(7.0))
    np.testing.assert_allclose(s.to_array(), [7, 7, 7, 0, 0, 0], atol=1e-12)


def test_uniaxial_111_maps_to_nv_axis():
    lab = StressTensor.from_matrix(np.full((3, 3), 1.0 / 3.0) * 9.0)
    nv = rotate_to_nv_frame(lab)
    np.testing.assert_allclose(nv.to_array(), [0, 0, 9, 0, 0, 0], atol=1e-12)


def test_hamiltonian_couplings_from_moduli_roundtrip():
    c = HamiltonianCouplings.from_moduli(0.8, 0.25, 1.19, 0.3, -1.1)
    assert c.moduli == pytest.approx((0.8, 0.25, 1.19))
    assert np.angle(c.e1) == pytest.approx(0.3)


def test_coupling_model_dict_roundtrip():
    assert CouplingModel.from_dict(MODEL.to_dict()) == MODEL


@settings(max_examples=200, deadline=None)
@given(tensors)
def test_decomposition_reassembles(s):
    parts = decompose(s)
    back = parts.reassemble().to_array()
    scale = max(1.0, np.abs(s.to_array()).max())
    np.testing.assert_allclose(back, s.to_array(), rtol=0, atol=4 * np.finfo(float).eps * scale)
    # the preserving part has the C3v form
    p = parts.preserving
    assert p.xx == p.yy and p.xy == p.xz == p.yz == 0.0


@settings(max_examples=200, deadline=None)
@given(tensors)
def test_breaking_part_does_not_move_d(s):
    parts = decompose(s)
    assert couple(parts.breaking, MODEL).d == pytest.approx(MODEL.d0_ghz, abs=1e-9)
    pres = couple(parts.preserving, MODEL)
    assert pres.e1 == pytest.approx(0.0, abs=1e-12) and pres.e2 == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(tensors, tensors, st.floats(-3.0, 3.0))
def test_coupling_is_affine(a, b, k):
    ca, cb, cs = couple(a, MODEL), couple(b, MODEL), couple(a + b * k, MODEL)
    assert cs.e1 == pytest.approx(ca.e1 + k * cb.e1, abs=1e-9)
    assert cs.e2 == pytest.approx(ca.e2 + k * cb.e2, abs=1e-9)
    assert cs.d - MODEL.d0_ghz == pytest.approx((ca.d - MODEL.d0_ghz) + k * (cb.d - MODEL.d0_ghz), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(tensors)
def test_rotation_preserves_invariants(s):
    nv = rotate_to_nv_frame(s).to_matrix()
    lab = s.to_matrix()
    assert np.trace(nv) == pytest.approx(np.trace(lab), abs=1e-9)
    np.testing.assert_allclose(np.linalg.eigvalsh(nv), np.linalg.eigvalsh(lab), atol=1e-9)


def test_thousand_random_tensors_reassemble():
    rng = np.random.default_rng(3)
    for arr in rng.normal(0.0, 30.0, (1000, 6)):
        s = StressTensor.from_array(arr)
        np.testing.assert_allclose(decompose(s).reassemble().to_array(), arr, rtol=4e-16, atol=1e-13)
