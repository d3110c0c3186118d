import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperepp.analysis import oracle_qsjm
from hyperepp.cavity import resonant_moduli
from hyperepp.protocol_primitives import (
    I2,
    KET_DOWN,
    KET_I1,
    KET_L,
    KET_PLUS,
    KET_R,
    P0,
    P1,
    X,
    GateName,
    GateSpec,
    H_PS,
    apply_gate,
    bell_vector,
    fourphoton_transfer,
    hyperentangled_bell,
    pass_matrix,
    psqnd_parity_check,
    psqnd_phase_check,
    qsjm_join,
    qsjm_join_spatial,
    qsjm_transfer,
    single_photon,
    swap_pol_spatial,
    with_spins,
)
from hyperepp.statevec import Ensemble, fidelity, mix_map, photon, register


def random_ket(rng, d=2):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_resonant_coeffs(rng):
    return resonant_moduli(rng.uniform(0, 3), rng.uniform(0, 1), rng.uniform(0.01, 0.5))


def test_ideal_passes_are_spin_controlled_nots():
    # register order (pol, spatial, spin)
    cnot_pol = np.kron(np.kron(I2, I2), P0) + np.kron(np.kron(X, I2), P1)
    cnot_spat = np.kron(np.kron(I2, I2), P0) + np.kron(np.kron(I2, X), P1)
    assert np.allclose(pass_matrix("P"), cnot_pol, atol=1e-14)
    assert np.allclose(pass_matrix("S"), cnot_spat, atol=1e-14)


def test_gate_conventions():
    s = single_photon("A", KET_R, KET_I1)
    assert apply_gate(s, "sigma_zP", "A").amplitude(A=0) == -1
    assert apply_gate(s, GateSpec(GateName.sigma_xP, "A")).amplitude(A=2) == 1
    assert apply_gate(s, "sigma_xS", "A").amplitude(A=1) == 1
    assert str(GateSpec(GateName.H_P, "B")) == "H_P(B)"
    with pytest.raises(ValueError):
        bell_vector(5)


def test_swap_is_an_involution():
    rng = np.random.default_rng(0)
    s = register([photon("A")], [random_ket(rng, 4)])
    once = swap_pol_spatial(s, "A")
    assert not np.allclose(once.amplitudes, s.amplitudes)
    assert np.allclose(swap_pol_spatial(once, "A").amplitudes, s.amplitudes, atol=1e-15)


def test_swap_exchanges_degrees_of_freedom():
    s = single_photon("A", KET_L, KET_I1)
    t = swap_pol_spatial(s, "A")
    assert fidelity(t, single_photon("A", KET_R, KET_DOWN)) == pytest.approx(1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_qsjm_branch_independence(seed):
    rng = np.random.default_rng(seed)
    alpha, beta, delta = random_ket(rng), random_ket(rng), random_ket(rng)
    a = single_photon("A", alpha, KET_I1)
    b = single_photon("B", beta, delta)
    _, branches = qsjm_join(a, b)
    expected = single_photon("B", alpha, delta)
    assert len(branches) == 4
    for br in branches:
        assert fidelity(br.survivor, expected) == pytest.approx(1, abs=1e-12)
        # source click is unbiased; the spin reads up with probability |beta_1|^2
        p_spin = abs(beta[0]) ** 2 if ("e", "up") in br.outcomes else abs(beta[1]) ** 2
        assert br.probability == pytest.approx(p_spin / 2, abs=1e-12)


def test_qsjm_branches_are_uniform_for_an_unbiased_target():
    rng = np.random.default_rng(8)
    for beta in (KET_PLUS, np.array([1, 1j]) / np.sqrt(2)):
        _, branches = qsjm_join(single_photon("A", random_ket(rng), KET_I1), single_photon("B", beta, random_ket(rng)))
        assert [br.probability for br in branches] == pytest.approx([0.25] * 4, abs=1e-12)


def test_qsjm_marginals_for_a_spatial_superposition():
    rng = np.random.default_rng(1)
    alpha, gamma_ = random_ket(rng), random_ket(rng)
    b = single_photon("B", KET_PLUS, KET_I1)
    _, branches = qsjm_join(single_photon("A", alpha, gamma_), b)
    assert sum(br.probability for br in branches) == pytest.approx(1)
    for pol, spin_out in itertools.product("RL", ("up", "down")):
        p = sum(br.probability for br in branches if ("A.P", pol) in br.outcomes and ("e", spin_out) in br.outcomes)
        assert p == pytest.approx(0.25)


def test_qsjm_spatial_variant_moves_the_spatial_state():
    rng = np.random.default_rng(2)
    gamma_, beta, delta = random_ket(rng), random_ket(rng), random_ket(rng)
    new_b, branches = qsjm_join_spatial(single_photon("A", KET_R, gamma_), single_photon("B", beta, delta))
    assert fidelity(new_b, single_photon("B", gamma_, delta)) == pytest.approx(1)


def test_qsjm_requires_plus_spin():
    a = single_photon("A", KET_R, KET_I1)
    b = single_photon("B", KET_R, KET_I1)
    with pytest.raises(ValueError):
        qsjm_join(a, b, spin_state=KET_DOWN)
    qsjm_join(a, b, spin_state=KET_PLUS)


def test_qsjm_commutes_with_mixing():
    rng = np.random.default_rng(3)
    comps = [(w, with_spins(single_photon("A", random_ket(rng), KET_I1).tensor(single_photon("B", KET_R, KET_I1)), ["e"])) for w in (0.3, 0.7)]
    mixed, survival = mix_map(Ensemble(comps), lambda s: qsjm_transfer(s, "A", "B", "e"))
    assert survival == pytest.approx(1)
    direct = [(w * br.probability, br.survivor) for w, s in comps for br in qsjm_transfer(s, "A", "B", "e")]
    for (w1, s1), (w2, s2) in zip(mixed.components, direct):
        assert w1 == pytest.approx(w2)
        assert fidelity(s1, s2) == pytest.approx(1)


def expected_phase_readout(k, l):
    """Phase-check spin readout per Bell class: e1 '+' for pol phase 0, e2 '-' for spatial phase 0."""
    return ("+" if k in (1, 3) else "-") + ("-" if l in (1, 3) else "+")


@pytest.mark.parametrize("k,l", list(itertools.product(range(1, 5), repeat=2)))
def test_qnd_leaves_every_hyperentangled_state_invariant(k, l):
    state = hyperentangled_bell(k, l)
    outcome, survivor, branches = psqnd_phase_check(state)
    assert len(branches) == 1
    assert branches[0].outcomes[0][1] == expected_phase_readout(k, l)
    assert outcome.phase_pol == (0 if k in (1, 3) else 180)
    assert outcome.phase_spat == (0 if l in (1, 3) else 180)
    assert fidelity(survivor, state) == pytest.approx(1, abs=1e-12)

    parity, survivor, branches = psqnd_parity_check(state)
    assert len(branches) == 1
    assert parity.pol_parity == ("even" if k in (1, 2) else "odd")
    assert parity.spat_parity == ("even" if l in (1, 2) else "odd")
    assert fidelity(survivor, state) == pytest.approx(1, abs=1e-12)


def test_parity_check_splits_a_superposition():
    product_state = register([photon("A"), photon("B")], [np.eye(4)[0], np.eye(4)[0]])  # |R i1>|R i1>
    _, _, branches = psqnd_parity_check(product_state)
    assert len(branches) == 1
    assert branches[0].tag.pol_parity == "even" and branches[0].tag.spat_parity == "even"
    rl = register([photon("A"), photon("B")], [np.eye(4)[0], (np.eye(4)[0] + np.eye(4)[2]) / np.sqrt(2)])
    _, _, branches = psqnd_parity_check(rl)
    assert sorted(br.tag.pol_parity for br in branches) == ["even", "odd"]
    assert all(br.probability == pytest.approx(0.5) for br in branches)


@pytest.mark.parametrize("target_k,donor_k", list(itertools.product((1, 3), repeat=2)))
def test_fourphoton_transfer_moves_the_donor_class(target_k, donor_k):
    # worked example: AB odd pol / even spatial, A'B' even pol / odd spatial, and the other combinations
    ab = hyperentangled_bell(target_k, 1)
    donor = hyperentangled_bell(donor_k, 3, ("A'", "B'"))
    joint = with_spins(ab.tensor(donor), ["ea", "eb"])
    branches = fourphoton_transfer(joint, ("A'", "B'"), ("A", "B"))
    assert sum(br.probability for br in branches) == pytest.approx(1)
    expected = hyperentangled_bell(donor_k, 1)
    for br in branches:
        assert fidelity(br.survivor, expected) == pytest.approx(1, abs=1e-12)


def test_fourphoton_premeasure_stage_keeps_spins():
    joint = with_spins(hyperentangled_bell(3, 1).tensor(hyperentangled_bell(1, 3, ("A'", "B'"))), ["ea", "eb"])
    branches = fourphoton_transfer(joint, ("A'", "B'"), ("A", "B"), stage="premeasure")
    assert all(set(br.survivor.labels) == {"A", "B", "ea", "eb"} for br in branches)


def test_h_ps_is_self_inverse():
    rng = np.random.default_rng(4)
    s = register([photon("A")], [random_ket(rng, 4)])
    assert np.allclose(H_PS(H_PS(s, "A"), "A").amplitudes, s.amplitudes)


def test_nonideal_qsjm_success_matches_power_law():
    rng = np.random.default_rng(7)
    for _ in range(10):
        c = random_resonant_coeffs(rng)
        _, eta = oracle_qsjm(c)
        assert eta == pytest.approx(sum(x * x for x in c) ** 3 / 8, abs=1e-9)


def test_nonideal_primitives_lose_probability():
    c = resonant_moduli(0.5, 0.3)
    joint = with_spins(single_photon("A", KET_PLUS, KET_I1).tensor(single_photon("B", KET_R, KET_I1)), ["e"])
    total = sum(br.probability for br in qsjm_transfer(joint, "A", "B", "e", c))
    assert 0 < total < 1
    _, _, branches = psqnd_phase_check(hyperentangled_bell(1, 1), coeffs=c)
    assert 0 < sum(br.probability for br in branches) < 1
