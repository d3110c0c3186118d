"""Two-step hyperentanglement purification for Bell pairs and three-photon GHZ states.

Two layers live here.  The analytic layer (recurrences, efficiencies, the GHZ
improvement threshold, iteration) works on mixture parameters only.  The circuit
layer runs the protocols exactly over :class:`~hyperepp.statevec.Ensemble` inputs,
enumerating every spin and detector outcome, so its case probabilities and output
weights can be compared one to one with the analytic layer.

Bell error model: polarization bit flips (phi_1 -> phi_3) and spatial phase flips
(phi_1 -> phi_2).  Spatial Hadamards on all photons turn the phase flips into bit
flips before the parity checks, so surviving pairs come out in
span{phi_1, phi_3} for both DOFs.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product as iproduct
from typing import Callable, Sequence

import numpy as np

from .protocol_primitives import (
    H,
    GateName,
    GateSpec,
    H_PS,
    apply_gate,
    bell_vector,
    fourphoton_transfer,
    hyperentangled_bell,
    psqnd_parity_check,
    qsjm_transfer,
    swap_pol_spatial,
    with_spins,
)
from .statevec import (
    BranchRecord,
    Ensemble,
    QuantumState,
    apply_local,
    measure_enumerate,
    partial_overlap,
    photon,
)

_SUM_TOL = 1e-12


# --- mixtures -----------------------------------------------------------------------
def _check_prob(name: str, x: float) -> None:
    if not (-_SUM_TOL <= x <= 1 + _SUM_TOL):
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


@dataclass(frozen=True)
class BellMixture:
    F1: float
    F2: float

    def __post_init__(self) -> None:
        _check_prob("F1", self.F1)
        _check_prob("F2", self.F2)

    @property
    def joint_fidelity(self) -> float:
        return self.F1 * self.F2


@dataclass(frozen=True)
class GhzMixture:
    F0: float
    F1: float
    F2: float
    F3: float
    P0: float
    P1: float

    def __post_init__(self) -> None:
        for name in ("F0", "F1", "F2", "F3", "P0", "P1"):
            _check_prob(name, getattr(self, name))
        if abs(self.F0 + self.F1 + self.F2 + self.F3 - 1) > _SUM_TOL:
            raise ValueError("F0+F1+F2+F3 must equal 1")
        if abs(self.P0 + self.P1 - 1) > _SUM_TOL:
            raise ValueError("P0+P1 must equal 1")

    @classmethod
    def from_fidelities(cls, F0: float, F1: float, F2: float, P0: float) -> "GhzMixture":
        return cls(F0, F1, F2, 1 - F0 - F1 - F2, P0, 1 - P0)

    @property
    def F(self) -> tuple[float, float, float, float]:
        return (self.F0, self.F1, self.F2, self.F3)

    @property
    def joint_fidelity(self) -> float:
        return self.F0 * self.P0


# --- analytic layer ---------------------------------------------------------------------
def _square_renorm(f: float) -> float:
    den = f * f + (1 - f) ** 2
    return f * f / den


def bell_recurrence(m: BellMixture) -> BellMixture:
    return BellMixture(_square_renorm(m.F1), _square_renorm(m.F2))


def bell_efficiency(m: BellMixture, with_qsjm: bool = True) -> float:
    """Y (with QSJM) or Y0 (first-step keep only) for one round."""
    a = m.F1**2 + (1 - m.F1) ** 2
    b = m.F2**2 + (1 - m.F2) ** 2
    return min(a, b) if with_qsjm else a * b


def ghz_recurrence(m: GhzMixture) -> GhzMixture:
    sf = sum(f * f for f in m.F)
    sp = m.P0**2 + m.P1**2
    if sf == 0 or sp == 0:
        raise ValueError("degenerate GHZ mixture")
    F = [f * f / sf for f in m.F]
    P0 = m.P0**2 / sp
    # renormalize so the sums hold to the last bit
    s = sum(F)
    F = [f / s for f in F]
    return GhzMixture(F[0], F[1], F[2], F[3], P0, 1 - P0)


def ghz_efficiency(m: GhzMixture, with_qsjm: bool = True) -> float:
    sf = sum(f * f for f in m.F)
    sp = m.P0**2 + m.P1**2
    return min(sf, sp) if with_qsjm else sf * sp


def ghz_improvement_threshold(F1: float, F2: float) -> float | None:
    """Smallest F0 above which one GHZ round raises F0 (with F3 = 1-F0-F1-F2).

    Returns ``None`` when the discriminant is negative (no threshold exists).
    """
    if F1 + F2 > 1 + _SUM_TOL:
        raise ValueError("F1 + F2 must not exceed 1")
    disc = 1 + 4 * (F1 + F2) - 12 * (F1**2 + F2**2) - 8 * F1 * F2
    if disc < 0:
        return None
    return 0.25 * (3 - 2 * F1 - 2 * F2 - np.sqrt(disc))


@dataclass(frozen=True)
class TrajectoryPoint:
    round: int
    mixture: BellMixture | GhzMixture
    fidelity: float


def iterate(recurrence: Callable, m, n: int) -> list[TrajectoryPoint]:
    """Rounds 0..n of a recurrence; ``fidelity`` is F1*F2 (Bell) or F0*P0 (GHZ)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = [TrajectoryPoint(0, m, m.joint_fidelity)]
    for k in range(1, n + 1):
        m = recurrence(m)
        out.append(TrajectoryPoint(k, m, m.joint_fidelity))
    return out


# --- circuit layer: shared pieces ------------------------------------------------------------
class Case(Enum):
    CASE1_KEEP = "Case1_keep"
    CASE2_DISCARD = "Case2_discard"
    CASE3_POL_OK = "Case3_pol_ok"
    CASE4_SPAT_OK = "Case4_spat_ok"


@dataclass(frozen=True)
class CaseLabel:
    value: Case
    probability: float


@dataclass
class CaseResult:
    label: CaseLabel
    ensemble: Ensemble | None
    branches: list[BranchRecord] = field(default_factory=list)

    @property
    def probability(self) -> float:
        return self.label.probability


@dataclass(frozen=True)
class StepOptions:
    coeffs: object = None  # None = ideal scattering
    detect_early: bool = True  # detect C, D (C', D') in the first step for cases 3 and 4


def _classify(pol_same: bool, spat_same: bool) -> Case:
    if pol_same and spat_same:
        return Case.CASE1_KEEP
    if pol_same:
        return Case.CASE3_POL_OK
    if spat_same:
        return Case.CASE4_SPAT_OK
    return Case.CASE2_DISCARD


def _outcome(br: BranchRecord, name: str) -> str:
    for key, val in br.outcomes:
        if key == name:
            return val
    raise KeyError(name)


def _collect(results: dict, case, weight: float, br: BranchRecord) -> None:
    results.setdefault(case, []).append((weight, br))


def _finish(results: dict, cases: Sequence) -> dict:
    out = {}
    for case in cases:
        items = results.get(case, [])
        prob = float(sum(w * br.probability for w, br in items))
        comps = [(w * br.probability, br.survivor) for w, br in items if w * br.probability > _SUM_TOL]
        ens = Ensemble(comps).normalized().spectral() if comps else None
        out[case] = CaseResult(CaseLabel(case, prob), ens, [br for _, br in items])
    return out


def dof_class_weight(ensemble: Ensemble, photons: Sequence[str], dof: str, vector: np.ndarray) -> float:
    """Ensemble weight of ``vector`` on one DOF of ``photons``."""
    tot = ensemble.total_weight
    sel = [f"{p}.{dof}" for p in photons]
    return sum(w * partial_overlap(s, sel, vector) for w, s in ensemble.components) / tot


# --- Bell circuit ---------------------------------------------------------------------------
def bell_ensemble(m: BellMixture, pairs: Sequence[Sequence[str]] = (("A", "B"), ("C", "D"))) -> Ensemble:
    """rho_AB (x) rho_CD as 16 weighted pure states (zero weights dropped)."""
    pol = [(1, m.F1), (3, 1 - m.F1)]
    spat = [(1, m.F2), (2, 1 - m.F2)]
    comps = []
    per_pair = [(wk * wl, k, l) for (k, wk), (l, wl) in iproduct(pol, spat)]
    for choice in iproduct(per_pair, repeat=len(pairs)):
        w = float(np.prod([c[0] for c in choice]))
        if w <= 0:
            continue
        state = hyperentangled_bell(choice[0][1], choice[0][2], pairs[0])
        for (_, k, l), pr in zip(choice[1:], pairs[1:]):
            state = state.tensor(hyperentangled_bell(k, l, pr))
        comps.append((w, state))
    return Ensemble(comps)


def _bell_postprocess(state: QuantumState, odd_p: bool, odd_s: bool, keep=("A", "B"), drop=("C", "D")) -> list[BranchRecord]:
    """sigma_x on the dropped pair for odd parities, H on both DOFs, detect, sigma_z on B.

    Correction table (derived by enumerating the four-photon families):
      * the reference pair (A C) read odd in a DOF -> sigma_x of that DOF on C and D
      * the detector clicks of C and D differ in a DOF -> sigma_z of that DOF on B
    """
    c, d = drop
    s = state
    corr = []
    for odd, gate in ((odd_p, GateName.sigma_xP), (odd_s, GateName.sigma_xS)):
        if odd:
            for ph in drop:
                s = apply_gate(s, GateSpec(gate, ph))
                corr.append(f"{gate.value}({ph})")
    for ph in drop:
        s = H_PS(s, ph)
    out = []
    for br in measure_enumerate(s, list(drop), discard=True):
        surv = br.survivor
        c2 = list(corr)
        if _outcome(br, f"{c}.P") != _outcome(br, f"{d}.P"):
            surv = apply_gate(surv, GateSpec(GateName.sigma_zP, keep[1]))
            c2.append(f"sigma_zP({keep[1]})")
        if _outcome(br, f"{c}.S") != _outcome(br, f"{d}.S"):
            surv = apply_gate(surv, GateSpec(GateName.sigma_zS, keep[1]))
            c2.append(f"sigma_zS({keep[1]})")
        out.append(BranchRecord(br.outcomes, br.probability, surv, c2))
    return out


def bell_first_step(ensemble: Ensemble, options: StepOptions = StepOptions(), spins=("ea1", "ea2", "eb1", "eb2")) -> dict[Case, CaseResult]:
    """Parity checks on AC and BD in both DOFs, then classification into cases 1-4.

    Case 1 (and cases 3, 4 when ``detect_early``) survivors are AB pairs after the
    C, D corrections and detection.  With ``detect_early=False`` cases 3 and 4 keep
    the four photons, with the sigma_x corrections applied, for the second step.
    Probabilities are absolute: for lossy scattering they sum to the efficiency.
    """
    labels = ensemble.components[0][1].labels
    for need in ("A", "B", "C", "D"):
        if need not in labels or len(labels) != 4:
            raise ValueError(f"bell_first_step needs photons A, B, C, D; got {labels}")
    results: dict = {}
    tot = ensemble.total_weight
    for w, state in ensemble.components:
        w = w / tot
        s = state
        for ph in ("A", "B", "C", "D"):
            s = apply_gate(s, GateSpec(GateName.H_S, ph))
        _, _, br_ac = psqnd_parity_check(s, ("A", "C"), spins[:2], options.coeffs)
        for b1 in br_ac:
            o1 = b1.tag
            _, _, br_bd = psqnd_parity_check(b1.survivor, ("B", "D"), spins[2:], options.coeffs)
            for b2 in br_bd:
                o2 = b2.tag
                chain = b1.extend(b2)
                chain.tag = (o1, o2)
                case = _classify(o1.pol_parity == o2.pol_parity, o1.spat_parity == o2.spat_parity)
                odd_p, odd_s = o1.pol_parity == "odd", o1.spat_parity == "odd"
                if case is Case.CASE2_DISCARD:
                    _collect(results, case, w, chain)
                elif case is Case.CASE1_KEEP or options.detect_early:
                    for b3 in _bell_postprocess(chain.survivor, odd_p, odd_s):
                        _collect(results, case, w, chain.extend(b3))
                else:
                    s4 = chain.survivor
                    corr = []
                    for odd, gate in ((odd_p, GateName.sigma_xP), (odd_s, GateName.sigma_xS)):
                        if odd:
                            for ph in ("C", "D"):
                                s4 = apply_gate(s4, GateSpec(gate, ph))
                                corr.append(f"{gate.value}({ph})")
                    _collect(results, case, w, BranchRecord(chain.outcomes, chain.probability, s4, chain.corrections + corr, chain.tag))
    return _finish(results, list(Case))


def _detect_pending(group: Ensemble) -> Ensemble:
    """Second-step detection of C, D for groups kept whole by the first step."""
    comps = []
    for w, s in group.components:
        if "C" not in s.labels:
            comps.append((w, s))
            continue
        for br in _bell_postprocess(s, False, False):
            comps.append((w * br.probability, br.survivor))
    return Ensemble(comps).normalized().spectral()


def bell_second_step(
    group_a: CaseResult,
    group_b: CaseResult,
    options: StepOptions = StepOptions(),
    dof: str = "P",
    spins=("ea", "eb"),
) -> tuple[Ensemble | None, list[BranchRecord]]:
    """Join a case-3 group and a case-4 group into a case-1-like AB pair.

    With ``dof="P"`` the polarization class of the case-3 pair is moved onto the
    case-4 pair; with ``dof="S"`` the spatial class of the case-4 pair is moved onto
    the case-3 pair (swap, polarization transfer, swap back).  Either argument order
    is accepted.
    """
    cases = {group_a.label.value: group_a, group_b.label.value: group_b}
    if set(cases) != {Case.CASE3_POL_OK, Case.CASE4_SPAT_OK}:
        raise ValueError(f"second step needs one case-3 and one case-4 group, got {[c.value for c in cases]}")
    if any(g.ensemble is None for g in cases.values()):
        raise ValueError("an input group is empty")
    g3 = _detect_pending(cases[Case.CASE3_POL_OK].ensemble)
    g4 = _detect_pending(cases[Case.CASE4_SPAT_OK].ensemble)
    donor, receiver = (g3, g4) if dof == "P" else (g4, g3)
    prime = {"A": "A'", "B": "B'"}
    comps, branches = [], []
    for (wd, sd), (wr, sr) in iproduct(donor.components, receiver.components):
        joint = with_spins(sr.tensor(sd.relabel(prime)), spins)
        if dof == "S":
            for ph in ("A", "B", "A'", "B'"):
                joint = swap_pol_spatial(joint, ph)
        for br in fourphoton_transfer(joint, ("A'", "B'"), ("A", "B"), spins, options.coeffs):
            surv = br.survivor
            if dof == "S":
                surv = swap_pol_spatial(swap_pol_spatial(surv, "A"), "B")
            w = wd * wr * br.probability
            branches.append(replace(br, probability=w, survivor=surv))
            if w > _SUM_TOL:
                comps.append((w, surv))
    if not comps:
        return None, branches
    return Ensemble(comps).normalized().spectral(), branches


@dataclass
class BellRoundResult:
    case_probabilities: dict[Case, float]
    keep: Ensemble | None
    joined: Ensemble | None
    Y0: float
    Y: float

    def weights(self, ens: Ensemble) -> BellMixture:
        F1 = dof_class_weight(ens, ("A", "B"), "P", bell_vector(1))
        F2 = dof_class_weight(ens, ("A", "B"), "S", bell_vector(1))
        return BellMixture(min(1.0, F1), min(1.0, F2))


def run_bell_round(m: BellMixture, options: StepOptions = StepOptions()) -> BellRoundResult:
    """One full round by circuit simulation: first step plus the case-3/4 join."""
    first = bell_first_step(bell_ensemble(m), options)
    probs = {c: r.probability for c, r in first.items()}
    joined = None
    if first[Case.CASE3_POL_OK].ensemble is not None and first[Case.CASE4_SPAT_OK].ensemble is not None:
        joined, _ = bell_second_step(first[Case.CASE3_POL_OK], first[Case.CASE4_SPAT_OK], options)
    y0 = probs[Case.CASE1_KEEP]
    y = y0 + min(probs[Case.CASE3_POL_OK], probs[Case.CASE4_SPAT_OK])
    return BellRoundResult(probs, first[Case.CASE1_KEEP].ensemble, joined, y0, y)


# --- GHZ circuit ----------------------------------------------------------------------------
_GHZ_PATTERNS = {0: (0, 0, 0), 1: (0, 0, 1), 2: (0, 1, 0), 3: (1, 0, 0)}


def ghz_vector(i: int, sign: int = +1) -> np.ndarray:
    """Three-qubit vector of psi_i^{sign}: (|x> + sign |x-bar>)/sqrt 2 for the class pattern x."""
    x = _GHZ_PATTERNS[i]
    v = np.zeros((2, 2, 2), dtype=complex)
    v[x] = np.sqrt(0.5)
    v[tuple(1 - b for b in x)] += sign * np.sqrt(0.5)
    return v.reshape(-1)


def ghz_state(i: int, sign: int, photons: Sequence[str] = ("A", "B", "C")) -> QuantumState:
    """|psi_i^+>_P (x) |psi_0^sign>_S on three photons."""
    p = ghz_vector(i, +1).reshape(2, 2, 2)
    s = ghz_vector(0, sign).reshape(2, 2, 2)
    amps = np.einsum("ace,bdf->abcdef", p, s)  # pA sA pB sB pC sC
    return QuantumState(tuple(photon(lb) for lb in photons), amps.reshape(-1))


def ghz_ensemble(m: GhzMixture, triples: Sequence[Sequence[str]] = (("A", "B", "C"), ("A'", "B'", "C'"))) -> Ensemble:
    per = [(fi * pj, i, sg) for i, fi in enumerate(m.F) for sg, pj in ((+1, m.P0), (-1, m.P1))]
    comps = []
    for choice in iproduct(per, repeat=len(triples)):
        w = float(np.prod([c[0] for c in choice]))
        if w <= 0:
            continue
        state = ghz_state(choice[0][1], choice[0][2], triples[0])
        for (_, i, sg), tr in zip(choice[1:], triples[1:]):
            state = state.tensor(ghz_state(i, sg, tr))
        comps.append((w, state))
    return Ensemble(comps)


class GhzClass(Enum):
    KEEP = "keep"
    POL_OK = "pol_ok"  # polarization parities agree, spatial condition fails
    SPAT_OK = "spat_ok"
    DISCARD = "discard"


# spatial detection pattern of A'B'C' after the Hadamards -> photon receiving sigma_z^S.
# On the even- and odd-weight GHZ supports, m and its complement act alike, so one
# flip on a single photon (or none) always suffices.
GHZ_SPATIAL_CORRECTION: dict[tuple[int, int, int], str | None] = {
    (0, 0, 0): None,
    (1, 1, 1): None,
    (1, 0, 0): "A",
    (0, 1, 1): "A",
    (0, 1, 0): "B",
    (1, 0, 1): "B",
    (0, 0, 1): "C",
    (1, 1, 0): "C",
}


def _ghz_postprocess(state: QuantumState, pol_odd: Sequence[bool], spat_odd: Sequence[bool]) -> list[BranchRecord]:
    keep, drop = ("A", "B", "C"), ("A'", "B'", "C'")
    s = state
    corr = []
    for ph, po, so in zip(drop, pol_odd, spat_odd):
        if po:
            s = apply_gate(s, GateSpec(GateName.sigma_xP, ph))
            corr.append(f"sigma_xP({ph})")
        if so:
            s = apply_gate(s, GateSpec(GateName.sigma_xS, ph))
            corr.append(f"sigma_xS({ph})")
    for ph in drop:
        s = H_PS(s, ph)
    # the final H_S on the kept photons commutes with detecting the others, so it is applied once
    # here; the conditional sigma_zS correction then acts as sigma_xS on the far side of H_S
    for ph in keep:
        s = apply_gate(s, GateSpec(GateName.H_S, ph))
    out = []
    for br in measure_enumerate(s, list(drop), discard=True):
        mp =[1 if _outcome(br, f"{ph}.P") == "L" else 0 for ph in drop]
        ms = tuple(1 if _outcome(br, f"{ph}.S") == "2" else 0 for ph in drop)
        surv = br.survivor
        c2 = list(corr)
        if sum(mp) % 2:
            surv = apply_gate(surv, GateSpec(GateName.sigma_zP, "A"))
            c2.append("sigma_zP(A)")
        target = GHZ_SPATIAL_CORRECTION[ms]
        if target is not None:
            surv = apply_gate(surv, GateSpec(GateName.sigma_xS, target))
            c2.append(f"sigma_zS({target})")
        out.append(BranchRecord(br.outcomes, br.probability, surv, c2))
    return out


def ghz_first_step(ensemble: Ensemble, options: StepOptions = StepOptions(), spins=("e1", "e2")) -> dict[GhzClass, CaseResult]:
    """Parity checks on AA', BB', CC' and classification; survivors are ABC triples.

    Kept when all polarization parities agree and an odd number of spatial pairs is
    even.  Every non-discarded class is post-processed (sigma_x on primed photons,
    Hadamards and detection of A'B'C', sigma_z corrections, final spatial Hadamards).
    """
    labels = set(ensemble.components[0][1].labels)
    if labels != {"A", "B", "C", "A'", "B'", "C'"}:
        raise ValueError(f"ghz_first_step needs photons A B C A' B' C'; got {sorted(labels)}")
    pairs = (("A", "A'"), ("B", "B'"), ("C", "C'"))
    results: dict = {}
    tot = ensemble.total_weight
    for w, state in ensemble.components:
        w = w / tot
        s = state
        for ph in ("A", "B", "C", "A'", "B'", "C'"):
            s = apply_gate(s, GateSpec(GateName.H_S, ph))
        chains = [BranchRecord([], 1.0, s, [], ())]
        for pr in pairs:
            nxt = []
            for ch in chains:
                for br in psqnd_parity_check(ch.survivor, pr, spins, options.coeffs)[2]:
                    new = ch.extend(br)
                    new.tag = ch.tag + (br.tag,)
                    nxt.append(new)
            chains = nxt
        for ch in chains:
            pol = [o.pol_parity == "odd" for o in ch.tag]
            spat = [o.spat_parity == "odd" for o in ch.tag]
            pol_ok = len(set(pol)) == 1
            spat_ok = sum(not x for x in spat) % 2 == 1
            cls = {
                (True, True): GhzClass.KEEP,
                (True, False): GhzClass.POL_OK,
                (False, True): GhzClass.SPAT_OK,
                (False, False): GhzClass.DISCARD,
            }[(pol_ok, spat_ok)]
            if cls is GhzClass.DISCARD:
                _collect(results, cls, w, ch)
                continue
            for b3 in _ghz_postprocess(ch.survivor, pol, spat):
                _collect(results, cls, w, ch.extend(b3))
    return _finish(results, list(GhzClass))


def ghz_second_step(group_pol_ok: CaseResult, group_spat_ok: CaseResult, options: StepOptions = StepOptions(), spin_label: str = "e") -> Ensemble:
    """Move the polarization GHZ class of a POL_OK triple onto a SPAT_OK triple.

    Each party joins its two photons with one single-photon QSJM.
    """
    kinds = {group_pol_ok.label.value, group_spat_ok.label.value}
    if kinds != {GhzClass.POL_OK, GhzClass.SPAT_OK}:
        raise ValueError(f"incompatible classifications for the GHZ join: {[k.value for k in kinds]}")
    if group_pol_ok.label.value is GhzClass.SPAT_OK:
        group_pol_ok, group_spat_ok = group_spat_ok, group_pol_ok
    if group_pol_ok.ensemble is None or group_spat_ok.ensemble is None:
        raise ValueError("an input group is empty")
    prime = {"A": "A'", "B": "B'", "C": "C'"}
    current = [
        (wd * wr, sr.tensor(sd.relabel(prime)))
        for (wd, sd), (wr, sr) in iproduct(group_pol_ok.ensemble.components, group_spat_ok.ensemble.components)
    ]
    for src, tgt in (("A'", "A"), ("B'", "B"), ("C'", "C")):
        nxt = []
        for w, st in current:
            for br in qsjm_transfer(with_spins(st, [spin_label]), src, tgt, spin_label, options.coeffs):
                if br.probability > _SUM_TOL:
                    nxt.append((w * br.probability, br.survivor))
        # one eigendecomposition per stage keeps the branch count at the rank of the mixture
        current = Ensemble(nxt).spectral().components
    return Ensemble(current).normalized().spectral()


@dataclass
class GhzRoundResult:
    class_probabilities: dict[GhzClass, float]
    keep: Ensemble | None
    joined: Ensemble | None
    Y0: float
    Y: float

    @staticmethod
    def weights(ens: Ensemble) -> GhzMixture:
        F = [dof_class_weight(ens, ("A", "B", "C"), "P", ghz_vector(i, +1)) for i in range(4)]
        P0 = dof_class_weight(ens, ("A", "B", "C"), "S", ghz_vector(0, +1))
        P1 = dof_class_weight(ens, ("A", "B", "C"), "S", ghz_vector(0, -1))
        return GhzMixture(*F, P0, P1)


def run_ghz_round(m: GhzMixture, options: StepOptions = StepOptions()) -> GhzRoundResult:
    first = ghz_first_step(ghz_ensemble(m), options)
    probs = {c: r.probability for c, r in first.items()}
    joined = None
    if first[GhzClass.POL_OK].ensemble is not None and first[GhzClass.SPAT_OK].ensemble is not None:
        joined = ghz_second_step(first[GhzClass.POL_OK], first[GhzClass.SPAT_OK], options)
    y0 = probs[GhzClass.KEEP]
    y = y0 + min(probs[GhzClass.POL_OK], probs[GhzClass.SPAT_OK])
    return GhzRoundResult(probs, first[GhzClass.KEEP].ensemble, joined, y0, y)
