import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from q2pc import primitives as pr
from q2pc import qsim
from q2pc.qsim import (Angle8, StateVector, TwoTermState, apply_gate, basis_state,
                       branch_in_plane, enumerate_branches, make_state,
                       measure_in_plane, measure_z, plus_state, tensor,
                       two_term_to_dense)

SEED = b"\x02" * 32


def coins(tag="q"):
    return pr.coin_source(SEED, tag)


def test_angle8_wraps():
    assert Angle8(9) == 1
    assert Angle8(3) + Angle8(7) == 2
    assert -Angle8(3) == 5
    assert Angle8(2) - 5 == 5
    assert (Angle8(3) * 2) == 6
    assert Angle8(6).is_even and not Angle8(3).is_even


def test_h_on_zero():
    st_ = apply_gate(basis_state(1, 0), "H", 0)
    assert np.allclose(st_.amplitudes, [1 / math.sqrt(2)] * 2)


def test_cz_on_11():
    st_ = apply_gate(basis_state(2, 0b11), "CZ", (0, 1))
    assert np.allclose(st_.amplitudes, [0, 0, 0, -1])


def test_rz_quarter_turn():
    st_ = apply_gate(plus_state(), ("RZ", Angle8(2)), 0)
    assert qsim.overlap(st_, plus_state(Angle8(2))) > 1 - 1e-12


def test_rx_equals_hrzh():
    for a in range(8):
        direct = apply_gate(plus_state(Angle8(3)), ("RX", Angle8(a)), 0)
        composed = plus_state(Angle8(3))
        for g in ("H", ("RZ", Angle8(a)), "H"):
            composed = apply_gate(composed, g, 0)
        p_direct = np.abs(direct.amplitudes) ** 2
        p_composed = np.abs(composed.amplitudes) ** 2
        assert np.allclose(p_direct, p_composed, atol=1e-12)


def test_gate_errors():
    with pytest.raises(qsim.QsimError):
        apply_gate(basis_state(1, 0), "H", 1)
    with pytest.raises(qsim.QsimError):
        apply_gate(basis_state(2, 0), "CZ", (0,))
    with pytest.raises(qsim.QsimError):
        apply_gate(basis_state(2, 0), "CZ", (1, 1))
    with pytest.raises(qsim.QsimError):
        apply_gate(basis_state(1, 0), "SWAP", 0)


def test_measure_basis_state():
    out, post = measure_z(basis_state(1, 1), 0, coins())
    assert out == 1 and post.num_qubits == 0


def test_measure_product_state():
    st_ = tensor(plus_state(), basis_state(1, 0))  # qubit 0: |+>, qubit 1: |0>
    out, post = measure_z(st_, 0, coins())
    assert out in (0, 1)
    assert np.allclose(np.abs(post.amplitudes) ** 2, [1, 0])


def test_measure_iplus_half_half():
    br = qsim.branch_z(plus_state(Angle8(2)), 0)
    assert abs(br[0][0] - 0.5) < 1e-12 and abs(br[1][0] - 0.5) < 1e-12


def test_in_plane_eigenstate():
    for a in range(8):
        br = branch_in_plane(plus_state(Angle8(a)), 0, Angle8(a))
        assert br[0][0] > 1 - 1e-9
        br = branch_in_plane(plus_state(Angle8(a)), 0, Angle8(a + 4))
        assert br[1][0] > 1 - 1e-9


def test_in_plane_orthogonal_angle():
    br = branch_in_plane(plus_state(Angle8(2)), 0, Angle8(0))
    assert abs(br[0][0] - 0.5) < 1e-12


def test_in_plane_matches_rotate_then_measure():
    st_ = make_state(1, [0.6, 0.8j])
    for a in range(8):
        br = branch_in_plane(st_, 0, Angle8(a))
        rotated = apply_gate(apply_gate(st_, ("RZ", Angle8(-a)), 0), "H", 0)
        br2 = qsim.branch_z(rotated, 0)
        assert abs(br[0][0] - br2[0][0]) < 1e-12


def test_enumerate_single_qubit():
    branches = enumerate_branches(basis_state(1, 0), [(0, "Z")])
    by_out = {b.outcomes: b for b in branches}
    assert by_out[(0,)].probability == pytest.approx(1.0)
    assert by_out[(1,)].probability == 0.0 and by_out[(1,)].impossible


def test_enumerate_bell():
    bell = make_state(2, [1, 0, 0, 1])
    branches = enumerate_branches(bell, [(0, "Z"), (1, "Z")])
    probs = {b.outcomes: b.probability for b in branches}
    assert probs[(0, 0)] == pytest.approx(0.5)
    assert probs[(1, 1)] == pytest.approx(0.5)
    assert probs[(0, 1)] == 0.0 and probs[(1, 0)] == 0.0


def test_enumerate_matches_sampling():
    # 3-qubit circuit: sampled frequencies track enumerated probabilities
    st_ = tensor(tensor(plus_state(Angle8(2)), plus_state()), basis_state(1, 0))
    st_ = apply_gate(st_, "CZ", (0, 1))
    st_ = apply_gate(st_, "CZ", (1, 2))
    plan = [(0, "Z"), (1, Angle8(2)), (2, "Z")]
    branches = enumerate_branches(st_, plan)
    assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-9)
    n = 10_000
    src = coins("samp")
    freq: dict[tuple, int] = {}
    for _ in range(n):
        cur = st_
        live = [0, 1, 2]
        outs = []
        for q, basis in plan:
            idx = live.index(q)
            live.pop(idx)
            if basis == "Z":
                o, cur = measure_z(cur, idx, src)
            else:
                o, cur = measure_in_plane(cur, idx, basis, src)
            outs.append(o)
        t = tuple(outs)
        freq[t] = freq.get(t, 0) + 1
    for b in branches:
        p = b.probability
        bound = 3 * math.sqrt(max(p * (1 - p), 1e-12) / n) + 1e-9
        assert abs(freq.get(b.outcomes, 0) / n - p) <= max(bound, 0.02)


def test_two_term_dense():
    assert qsim.overlap(two_term_to_dense(TwoTermState(1, 0, 1, 1.0)), plus_state()) > 1 - 1e-12
    dense = two_term_to_dense(TwoTermState(2, 0b00, 0b11, -1.0))
    assert np.allclose(dense.amplitudes, np.array([1, 0, 0, -1]) / math.sqrt(2))


def test_two_term_validation():
    with pytest.raises(qsim.QsimError):
        TwoTermState(2, 1, 1, 1.0)
    with pytest.raises(qsim.QsimError):
        TwoTermState(1, 0, 1, 2.0)
    with pytest.raises(qsim.QsimError):
        TwoTermState(1, 0, 2, 1.0)


def test_qubit_budget():
    with pytest.raises(qsim.QsimError):
        StateVector(25, np.zeros(1 << 25, dtype=np.complex128))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 7), st.integers(0, 7), st.integers(0, 7))
def test_norm_preserved_property(a, b, c):
    st_ = tensor(plus_state(Angle8(a)), plus_state(Angle8(b)))
    st_ = apply_gate(st_, "CZ", (0, 1))
    st_ = apply_gate(st_, ("RZ", Angle8(c)), 0)
    st_ = apply_gate(st_, ("RX", Angle8(b)), 1)
    assert abs(float(np.sum(np.abs(st_.amplitudes) ** 2)) - 1.0) < 1e-9
