"""Circuit-level building blocks: single-photon gates, the polarization/spatial swap,
the quantum-state-joining method (QSJM) and the polarization-spatial QNDs.

Each photon pass through a QD-cavity unit is one composite linear map on
photon (x) spin.  The optical elements around the cavity (CPBS routing, wave
plates, X plate) are folded into two photon-only unitaries ``W`` (before) and
``V`` (after) chosen so that the ideal pass is an exact CNOT from the spin onto
one photonic DOF::

    pass = (V x 1) . S . (W x 1),   V = W^-1 U_up^-1

where ``S`` is the scattering map and ``U_up`` its ideal action for a spin-up
dot.  Because ``U_down = -U_up X_P X_S`` the ideal composite is
``1 x |up><up| + (W^-1 X_P X_S W) x |down><down|`` up to sign, which for the
two choices of ``W`` below is CNOT(spin -> polarization) and
CNOT(spin -> spatial mode).  The lossy scattering rules enter only through ``S``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .cavity import IDEAL_MATRIX, _moduli, check_rule_passivity, scattering_matrix
from .statevec import (
    BranchRecord,
    Kind,
    QuantumState,
    apply_local,
    measure_enumerate,
    photon,
    register,
    spin,
)

SQ2 = np.sqrt(0.5)
I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQ2
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

# single-DOF kets
KET_R = np.array([1, 0], dtype=complex)
KET_L = np.array([0, 1], dtype=complex)
KET_I1 = KET_R
KET_I2 = KET_L
KET_UP = KET_R
KET_DOWN = KET_L
KET_PLUS = np.array([1, 1], dtype=complex) * SQ2
KET_MINUS = np.array([1, -1], dtype=complex) * SQ2
PM_BASIS = np.column_stack([KET_PLUS, KET_MINUS])


class GateName(Enum):
    H_P = "H_P"
    H_S = "H_S"
    H_e = "H_e"
    sigma_xP = "sigma_xP"
    sigma_zP = "sigma_zP"
    sigma_xS = "sigma_xS"
    sigma_zS = "sigma_zS"
    U_phase = "U_phase"
    X_flip = "X_flip"


# sigma_z^P = -|R><R| + |L><L|, U = -|R><R| - |L><L|, sigma_z^S = |i1><i1| - |i2><i2|
_GATES: dict[GateName, tuple[np.ndarray, str]] = {
    GateName.H_P: (H, "P"),
    GateName.H_S: (H, "S"),
    GateName.H_e: (H, ""),
    GateName.sigma_xP: (X, "P"),
    GateName.sigma_zP: (-Z, "P"),
    GateName.sigma_xS: (X, "S"),
    GateName.sigma_zS: (Z, "S"),
    GateName.U_phase: (-I2.astype(complex), "P"),
    GateName.X_flip: (X, "P"),
}


@dataclass(frozen=True)
class GateSpec:
    name: GateName
    target: str  # photon or spin label

    @property
    def matrix(self) -> np.ndarray:
        return _GATES[self.name][0]

    @property
    def selector(self) -> str:
        dof = _GATES[self.name][1]
        return f"{self.target}.{dof}" if dof else self.target

    def __str__(self) -> str:
        return f"{self.name.value}({self.target})"


def apply_gate(state: QuantumState, gate: GateSpec | str, target: str | None = None) -> QuantumState:
    if not isinstance(gate, GateSpec):
        gate = GateSpec(GateName(gate), target)
    return apply_local(state, gate.selector, gate.matrix)


def H_PS(state: QuantumState, photon_label: str) -> QuantumState:
    """Hadamard on both DOFs of one photon."""
    return apply_local(state, photon_label, np.kron(H, H))


# --- states -------------------------------------------------------------------
def bell_vector(k: int) -> np.ndarray:
    """Two-qubit vector of phi_k (k = 1..4) in the basis 00, 01, 10, 11."""
    if k not in (1, 2, 3, 4):
        raise ValueError(f"Bell index must be in 1..4, got {k}")
    v = {
        1: [1, 0, 0, 1],
        2: [1, 0, 0, -1],
        3: [0, 1, 1, 0],
        4: [0, 1, -1, 0],
    }[k]
    return np.array(v, dtype=complex) * SQ2


def hyperentangled_bell(k: int, l: int, photons: Sequence[str] = ("A", "B")) -> QuantumState:
    """|phi_k>^P (x) |phi_l>^S on two photons."""
    p = bell_vector(k).reshape(2, 2)  # (pA, pB)
    s = bell_vector(l).reshape(2, 2)  # (sA, sB)
    amps = np.einsum("ac,bd->abcd", p, s)  # axes pA sA pB sB
    return QuantumState((photon(photons[0]), photon(photons[1])), amps.reshape(-1))


def single_photon(label: str, pol: np.ndarray, spatial: np.ndarray) -> QuantumState:
    v = np.kron(np.asarray(pol, dtype=complex), np.asarray(spatial, dtype=complex))
    return register([photon(label)], [v / np.linalg.norm(v)])


def with_spins(state: QuantumState, labels: Sequence[str], ket: np.ndarray = KET_PLUS) -> QuantumState:
    """Append freshly prepared spins (default |+>)."""
    out = state
    for lb in labels:
        out = out.tensor(register([spin(lb)], [ket]))
    return out


def _ensure_plus(state: QuantumState, labels: Sequence[str]) -> QuantumState:
    missing = [lb for lb in labels if lb not in state.labels]
    present = [lb for lb in labels if lb in state.labels]
    for lb in present:
        if state.subsystem(lb).kind is not Kind.SPIN:
            raise ValueError(f"{lb!r} is not an electron spin")
        proj = apply_local(state, lb, np.outer(KET_PLUS, KET_PLUS.conj()))
        if abs(proj.norm2() - state.norm2()) > 1e-9 * max(1.0, state.norm2()):
            raise ValueError(f"spin {lb!r} must start in |+>")
    return with_spins(state, missing)


# --- composite cavity passes ------------------------------------------------
_U_UP = IDEAL_MATRIX.reshape(2, 2, 2, 2, 2, 2)[:, :, 0, :, :, 0].reshape(4, 4)
_CNOT_P_TO_S = np.kron(P0, I2) + np.kron(P1, X)  # photon-internal: pol controls spatial
_CNOT_S_TO_P = np.kron(I2, P0) + np.kron(X, P1)
_W_POL = _CNOT_P_TO_S @ np.kron(Z, I2)
_W_SPAT = _CNOT_S_TO_P @ np.kron(I2, Z)


@lru_cache(maxsize=256)
def _composite(which: str, moduli: tuple[float, float, float, float]) -> np.ndarray:
    w = _W_POL if which == "P" else _W_SPAT
    v = np.linalg.inv(w) @ np.linalg.inv(_U_UP)
    return np.kron(v, I2) @ scattering_matrix(*moduli) @ np.kron(w, I2)


def pass_matrix(dof: str, coeffs=None) -> np.ndarray:
    """8x8 composite for one pass acting on (pol, spatial, spin)."""
    mod = (1.0, 0.0, 0.0, 1.0) if coeffs is None else _moduli(coeffs)
    check_rule_passivity(mod)
    return _composite(dof, tuple(float(x) for x in mod))


def pol_pass(state: QuantumState, photon_label: str, spin_label: str, coeffs=None) -> QuantumState:
    """Photon through the polarization unit: ideally CNOT(spin -> polarization)."""
    return apply_local(state, [photon_label, spin_label], pass_matrix("P", coeffs))


def spatial_pass(state: QuantumState, photon_label: str, spin_label: str, coeffs=None) -> QuantumState:
    """Photon through the spatial unit: ideally CNOT(spin -> spatial mode)."""
    return apply_local(state, [photon_label, spin_label], pass_matrix("S", coeffs))


def swap_pol_spatial(state: QuantumState, photon_label: str) -> QuantumState:
    """Exchange the polarization and spatial-mode amplitudes of one photon."""
    return apply_local(state, photon_label, SWAP)


# --- branching helpers ----------------------------------------------------------
def _branch(state: QuantumState, targets, weight: float, basis=None, labels=None) -> list[BranchRecord]:
    """Measure and discard, with probabilities scaled to absolute (``weight`` = norm so far)."""
    out = measure_enumerate(state, targets, basis, labels, discard=True)
    for br in out:
        br.probability *= weight
    return out


def _outcome(br: BranchRecord, name: str) -> str:
    for key, val in br.outcomes:
        if key == name:
            return val
    raise KeyError(name)


# --- QSJM -------------------------------------------------------------------------
def qsjm_transfer(state: QuantumState, source: str, target: str, spin_label: str, coeffs=None) -> list[BranchRecord]:
    """Move the polarization state of ``source`` onto ``target`` inside a joint register.

    ``spin_label`` must already be registered in |+>.  The source photon is detected
    (both DOFs) and the spin read out in {up, down}; the conditional sigma_x^P and
    sigma_z^P on the target are applied per branch.  Branch probabilities are absolute,
    so they sum to the pass efficiency.
    """
    norm0 = state.norm2()
    s = pol_pass(state, source, spin_label, coeffs)
    results = []
    for b1 in _branch(s, source, s.norm2() / norm0):
        flip = _outcome(b1, f"{source}.P") == "L"
        t = apply_local(b1.survivor, spin_label, H)
        t = pol_pass(t, target, spin_label, coeffs)
        t = apply_local(t, f"{target}.P", H)
        t = apply_local(t, spin_label, H)
        t = pol_pass(t, target, spin_label, coeffs)
        t = apply_local(t, spin_label, H)
        w = b1.probability * t.norm2()
        for b2 in _branch(t, spin_label, w):
            surv = b2.survivor
            corr = []
            if flip:
                surv = apply_gate(surv, GateSpec(GateName.sigma_xP, target))
                corr.append(f"sigma_xP({target})")
            if _outcome(b2, spin_label) == "down":
                surv = apply_gate(surv, GateSpec(GateName.sigma_zP, target))
                corr.append(f"sigma_zP({target})")
            results.append(BranchRecord(b1.outcomes + b2.outcomes, b2.probability, surv, corr))
    return results


def _check_spin_state(spin_state) -> None:
    if spin_state is None:
        return
    v = np.asarray(spin_state, dtype=complex)
    if v.shape != (2,) or abs(abs(np.vdot(KET_PLUS, v)) ** 2 - np.vdot(v, v).real) > 1e-9:
        raise ValueError("the QSJM spin must be prepared in |+>")


def qsjm_join(
    state_a: QuantumState,
    state_b: QuantumState,
    spin_label: str = "e",
    coeffs=None,
    spin_state=None,
) -> tuple[QuantumState, list[BranchRecord]]:
    """Give photon B the polarization state of photon A, keeping B's spatial mode.

    Returns B's state on the most probable branch (in the ideal case every branch
    carries the same B) and all branch records.
    """
    _check_spin_state(spin_state)
    (a,), (b,) = state_a.labels, state_b.labels
    joint = with_spins(state_a.tensor(state_b), [spin_label])
    branches = qsjm_transfer(joint, a, b, spin_label, coeffs)
    best = max(branches, key=lambda br: br.probability)
    return best.survivor, branches


def qsjm_join_spatial(state_a: QuantumState, state_b: QuantumState, spin_label: str = "e", coeffs=None, spin_state=None):
    """Give photon B's polarization the spatial-mode state of photon A."""
    (a,) = state_a.labels
    return qsjm_join(swap_pol_spatial(state_a, a), state_b, spin_label, coeffs, spin_state)


def fourphoton_transfer(
    state: QuantumState,
    source: Sequence[str],
    target: Sequence[str],
    spins: Sequence[str] = ("ea", "eb"),
    coeffs=None,
    stage: str = "final",
) -> list[BranchRecord]:
    """Two-party QSJM moving the polarization Bell class of ``source`` onto ``target``.

    Each party uses one spin.  After the source photons are detected, a sigma_z on the
    first spin for odd source parity leaves the spins holding the source class as a
    relative phase.  Each target photon then makes two passes around a Hadamard on
    its polarization and its spin.  With ``stage="premeasure"`` the branches stop just
    before the spin readout (survivors still carry both spins); otherwise the spins
    are read in {up, down}, sigma_z^P is applied to the first target photon for odd
    spin parity and H_P to both target photons.
    """
    sa, sb = source
    ta, tb = target
    ea, eb = spins
    norm0 = state.norm2()
    s = apply_local(state, f"{sa}.P", H)
    s = pol_pass(s, sa, ea, coeffs)
    s = apply_local(s, f"{sb}.P", H)
    s = pol_pass(s, sb, eb, coeffs)
    s = apply_local(s, ea, H)
    s = apply_local(s, eb, H)
    out = []
    for b1 in _branch(s, [sa, sb], s.norm2() / norm0):
        odd = _outcome(b1, f"{sa}.P") != _outcome(b1, f"{sb}.P")
        t = b1.survivor
        corr = []
        if odd:
            t = apply_local(t, ea, Z)
            corr.append(f"sigma_z({ea})")
        for ph, e in ((ta, ea), (tb, eb)):
            t = pol_pass(t, ph, e, coeffs)
            t = apply_local(t, f"{ph}.P", H)
            t = apply_local(t, e, H)
            t = pol_pass(t, ph, e, coeffs)
        t = apply_local(t, ea, H)
        t = apply_local(t, eb, H)
        w = b1.probability * t.norm2()
        if stage == "premeasure":
            out.append(BranchRecord(b1.outcomes, w, t.normalized(), corr))
            continue
        for b2 in _branch(t, [ea, eb], w):
            surv = b2.survivor
            c2 = list(corr)
            if _outcome(b2, ea) != _outcome(b2, eb):
                surv = apply_gate(surv, GateSpec(GateName.sigma_zP, ta))
                c2.append(f"sigma_zP({ta})")
            surv = apply_local(surv, f"{ta}.P", H)
            surv = apply_local(surv, f"{tb}.P", H)
            c2 += [f"H_P({ta})", f"H_P({tb})"]
            out.append(BranchRecord(b1.outcomes + b2.outcomes, b2.probability, surv, c2))
    return out


def qsjm_join_fourphoton(
    target_pair: QuantumState,
    source_pair: QuantumState,
    spins: Sequence[str] = ("ea", "eb"),
    coeffs=None,
    stage: str = "final",
) -> tuple[QuantumState, list[BranchRecord]]:
    """Transfer the polarization Bell class of ``source_pair`` onto ``target_pair``.

    Both arguments are two-photon states whose partner photons have already been
    detected; the first label of each register is Alice's photon.
    """
    if len(target_pair.register) != 2 or len(source_pair.register) != 2:
        raise ValueError("four-photon QSJM takes two two-photon states")
    joint = with_spins(target_pair.tensor(source_pair), spins)
    branches = fourphoton_transfer(joint, source_pair.labels, target_pair.labels, spins, coeffs, stage)
    best = max(branches, key=lambda br: br.probability)
    return best.survivor, branches


# --- P-S-QND ----------------------------------------------------------------------
@dataclass(frozen=True)
class ParityOutcome:
    pol_parity: str | None = None  # "even" | "odd"
    spat_parity: str | None = None
    phase_pol: int | None = None  # 0 or 180 (degrees; pi written as 180)
    phase_spat: int | None = None


def _phase_circuit(state: QuantumState, photons: Sequence[str], spins: Sequence[str], coeffs) -> QuantumState:
    a, b = photons
    e1, e2 = spins
    s = state
    for ph in (a, b):
        s = pol_pass(s, ph, e1, coeffs)
        s = spatial_pass(s, ph, e2, coeffs)
    # readout convention for e2: phase 0 in the spatial DOF reads as |->
    return apply_local(s, e2, Z)


def _qnd(state, photons, spins, coeffs, parity: bool):
    s = _ensure_plus(state, spins)
    norm0 = s.norm2()
    if parity:
        for ph in photons:
            s = H_PS(s, ph)
    s = _phase_circuit(s, photons, spins, coeffs)
    if parity:
        for ph in photons:
            s = H_PS(s, ph)
    branches = _branch(s, list(spins), s.norm2() / norm0, np.kron(PM_BASIS, PM_BASIS), ["++", "+-", "-+", "--"])
    for br in branches:
        lab = br.outcomes[0][1]
        pol_zero, spat_zero = lab[0] == "+", lab[1] == "-"
        if parity:
            br.tag = ParityOutcome(pol_parity="even" if pol_zero else "odd", spat_parity="even" if spat_zero else "odd")
        else:
            br.tag = ParityOutcome(phase_pol=0 if pol_zero else 180, phase_spat=0 if spat_zero else 180)
    best = max(branches, key=lambda br: br.probability)
    return best.tag, best.survivor, branches


def psqnd_phase_check(state: QuantumState, photons: Sequence[str] = ("A", "B"), spins: Sequence[str] = ("e1", "e2"), coeffs=None):
    """Read the relative phase (0 or pi) of a photon pair in both DOFs.

    Spins absent from the register are added in |+>; present ones must be in |+>.
    Returns (outcome of the most probable branch, its photonic survivor, all branches);
    each branch carries its :class:`ParityOutcome` in ``tag``.
    """
    return _qnd(state, photons, spins, coeffs, parity=False)


def psqnd_parity_check(state: QuantumState, photons: Sequence[str] = ("A", "B"), spins: Sequence[str] = ("e1", "e2"), coeffs=None):
    """Even/odd parity of a photon pair in both DOFs: the phase check conjugated by H_PS."""
    return _qnd(state, photons, spins, coeffs, parity=True)
