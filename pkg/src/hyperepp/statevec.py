"""Dense state-vector engine for photons (polarization x spatial mode) and electron spins.

Every subsystem is stored as one or two qubit axes of a tensor of shape ``(2,)*n``:
a photon contributes a polarization axis followed by a spatial axis (so its 4-dim
index is ``2*pol + spatial``), an electron spin contributes one axis.

Basis conventions used throughout the package::

    polarization  0 = R,  1 = L
    spatial mode  0 = i1, 1 = i2
    spin          0 = up, 1 = down

Targets are addressed with short selector strings: ``"A"`` (both DOFs of photon A),
``"A.P"`` (its polarization), ``"A.S"`` (its spatial mode) or ``"e1"`` (a spin).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

ATOL = 1e-12


class Kind(Enum):
    PHOTON = "photon"
    SPIN = "electron-spin"


@dataclass(frozen=True)
class SubsystemId:
    label: str
    kind: Kind

    @property
    def dimension(self) -> int:
        return 4 if self.kind is Kind.PHOTON else 2

    @property
    def nqubits(self) -> int:
        return 2 if self.kind is Kind.PHOTON else 1


def photon(label: str) -> SubsystemId:
    return SubsystemId(label, Kind.PHOTON)


def spin(label: str) -> SubsystemId:
    return SubsystemId(label, Kind.SPIN)


_AXIS_LABELS = {"P": ("R", "L"), "S": ("1", "2"), None: ("up", "down")}


def _as_targets(targets: str | Sequence[str]) -> list[str]:
    return [targets] if isinstance(targets, str) else list(targets)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state over an ordered register.  Amplitudes are kept as a flat vector."""

    register: tuple[SubsystemId, ...]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        labels = [s.label for s in self.register]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem label in register {labels}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.dimension:
            raise ValueError(f"amplitude vector has length {amps.size}, register needs {self.dimension}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "register", tuple(self.register))

    # --- shape bookkeeping -------------------------------------------------
    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.register)

    @property
    def dimension(self) -> int:
        return 1 << self.nqubits

    @property
    def nqubits(self) -> int:
        return sum(s.nqubits for s in self.register)

    def subsystem(self, label: str) -> SubsystemId:
        for s in self.register:
            if s.label == label:
                return s
        raise KeyError(f"subsystem {label!r} is not registered (have {self.labels})")

    def _offset(self, label: str) -> int:
        off = 0
        for s in self.register:
            if s.label == label:
                return off
            off += s.nqubits
        raise KeyError(f"subsystem {label!r} is not registered (have {self.labels})")

    def axes(self, targets: str | Sequence[str]) -> list[int]:
        """Qubit axes addressed by one or more selector strings, in the given order."""
        out: list[int] = []
        for tgt in _as_targets(targets):
            label, _, dof = tgt.partition(".")
            sub = self.subsystem(label)
            off = self._offset(label)
            if sub.kind is Kind.PHOTON:
                if dof == "":
                    out += [off, off + 1]
                elif dof == "P":
                    out.append(off)
                elif dof == "S":
                    out.append(off + 1)
                else:
                    raise ValueError(f"unknown photon DOF {dof!r} in selector {tgt!r}")
            else:
                if dof:
                    raise ValueError(f"spin {label!r} has no DOF {dof!r}")
                out.append(off)
        if len(set(out)) != len(out):
            raise ValueError(f"selector {targets!r} addresses an axis twice")
        return out

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.nqubits) if self.nqubits else self.amplitudes.reshape(())

    # --- value-like helpers -----------------------------------------------
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "QuantumState":
        n = np.sqrt(self.norm2())
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return QuantumState(self.register, self.amplitudes / n)

    def scaled(self, c: complex) -> "QuantumState":
        return QuantumState(self.register, self.amplitudes * c)

    def tensor(self, other: "QuantumState") -> "QuantumState":
        return QuantumState(self.register + other.register, np.kron(self.amplitudes, other.amplitudes))

    def reorder(self, labels: Sequence[str]) -> "QuantumState":
        """Same state with the register permuted to ``labels``."""
        if sorted(labels) != sorted(self.labels):
            raise ValueError(f"reorder needs a permutation of {self.labels}, got {list(labels)}")
        perm = self.axes(list(labels))
        data = np.transpose(self.tensor_view(), perm)
        return QuantumState(tuple(self.subsystem(lb) for lb in labels), data.reshape(-1))

    def relabel(self, mapping: dict[str, str]) -> "QuantumState":
        reg = tuple(SubsystemId(mapping.get(s.label, s.label), s.kind) for s in self.register)
        return QuantumState(reg, self.amplitudes)

    def amplitude(self, **indices: int) -> complex:
        """Amplitude at a basis index given per subsystem label (photon index ``2*pol+spatial``)."""
        idx: list[int] = []
        for s in self.register:
            v = indices[s.label]
            idx += [v >> 1, v & 1] if s.kind is Kind.PHOTON else [v]
        return complex(self.tensor_view()[tuple(idx)])

    def __repr__(self) -> str:
        return f"QuantumState(labels={self.labels}, dim={self.dimension})"


def register(subsystems: Sequence[SubsystemId], initial: Sequence[np.ndarray]) -> QuantumState:
    """Tensor product of per-subsystem pure states, in registration order."""
    if len(subsystems) != len(initial):
        raise ValueError("one initial state is needed per subsystem")
    labels = [s.label for s in subsystems]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate subsystem label in {labels}")
    amps = np.ones(1, dtype=complex)
    for sub, vec in zip(subsystems, initial):
        v = np.asarray(vec, dtype=complex).reshape(-1)
        if v.size != sub.dimension:
            raise ValueError(f"{sub.label}: expected a {sub.dimension}-dim state, got {v.size}")
        if abs(np.vdot(v, v).real - 1) > 1e-9:
            raise ValueError(f"{sub.label}: initial state is not normalized")
        amps = np.kron(amps, v)
    return QuantumState(tuple(subsystems), amps)


def product(*states: QuantumState) -> QuantumState:
    out = states[0]
    for s in states[1:]:
        out = out.tensor(s)
    return out


def _apply_axes(psi: np.ndarray, matrix: np.ndarray, axes: list[int]) -> np.ndarray:
    k = len(axes)
    mt = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(mt, psi, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_local(state: QuantumState, targets: str | Sequence[str], matrix: np.ndarray) -> QuantumState:
    """Apply ``matrix`` to the selected DOFs (identity elsewhere); no renormalization."""
    axes = state.axes(targets)
    m = np.asarray(matrix, dtype=complex)
    d = 2 ** len(axes)
    if m.shape != (d, d):
        raise ValueError(f"matrix of shape {m.shape} does not match the {d}-dim target {targets!r}")
    out = _apply_axes(state.tensor_view(), m, axes)
    return QuantumState(state.register, out.reshape(-1))


@dataclass
class BranchRecord:
    """One measurement path: outcomes, exact probability, corrections and the survivor."""

    outcomes: list[tuple[str, str]]
    probability: float
    survivor: QuantumState | None
    corrections: list[str] = field(default_factory=list)
    tag: object = None

    def extend(self, other: "BranchRecord") -> "BranchRecord":
        """Compose with a later branch taken from this record's survivor."""
        return BranchRecord(
            self.outcomes + other.outcomes,
            self.probability * other.probability,
            other.survivor,
            self.corrections + other.corrections,
            other.tag if other.tag is not None else self.tag,
        )


def _default_labels(state: QuantumState, targets: list[str]) -> list[tuple[str, tuple[str, str]]]:
    out = []
    for tgt in targets:
        label, _, dof = tgt.partition(".")
        sub = state.subsystem(label)
        if sub.kind is Kind.PHOTON:
            dofs = ["P", "S"] if dof == "" else [dof]
            out += [(f"{label}.{d}", _AXIS_LABELS[d]) for d in dofs]
        else:
            out.append((label, _AXIS_LABELS[None]))
    return out


def measure_enumerate(
    state: QuantumState,
    targets: str | Sequence[str],
    basis: np.ndarray | None = None,
    labels: Sequence[str] | None = None,
    *,
    discard: bool = False,
    keep_zero: bool = False,
) -> list[BranchRecord]:
    """Projective measurement with every outcome enumerated.

    ``basis`` holds the measurement vectors as columns (computational basis when
    omitted).  Probabilities are Born probabilities relative to the input norm and
    survivors are renormalized.  With ``discard`` the measured subsystems, which must
    be whole, are removed from the survivor's register.
    """
    tlist = _as_targets(targets)
    axes = state.axes(tlist)
    k = len(axes)
    d = 2**k
    b = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if b.shape != (d, d):
        raise ValueError(f"basis of shape {b.shape} does not match the {d}-dim target")
    if not np.allclose(b.conj().T @ b, np.eye(d), atol=ATOL * 10):
        raise ValueError("measurement basis is not orthonormal")
    if discard:
        for tgt in tlist:
            label, _, dof = tgt.partition(".")
            if dof and state.subsystem(label).kind is Kind.PHOTON:
                raise ValueError(f"cannot discard a single DOF ({tgt!r}); measure the whole photon")
    total = state.norm2()
    if total == 0:
        raise ValueError("cannot measure the zero vector")

    psi = state.tensor_view()
    rest = [a for a in range(state.nqubits) if a not in axes]
    moved = np.transpose(psi, axes + rest).reshape(d, -1)
    coeffs = b.conj().T @ moved  # row j: amplitude of the rest given outcome j
    if basis is None:
        per_axis = _default_labels(state, tlist)
    keep_reg = tuple(s for s in state.register if s.label not in {t.partition(".")[0] for t in tlist})

    branches = []
    for j in range(d):
        row = coeffs[j]
        p = float(np.vdot(row, row).real) / total
        if p <= ATOL and not keep_zero:
            continue
        if basis is None:
            bits = [(j >> (k - 1 - i)) & 1 for i in range(k)]
            outcomes = [(name, lab[bit]) for (name, lab), bit in zip(per_axis, bits)]
        else:
            lab = labels[j] if labels is not None else str(j)
            outcomes = [(",".join(tlist), lab)]
        if discard:
            surv = QuantumState(keep_reg, row)
        else:
            full = np.outer(b[:, j], row).reshape((2,) * (k + len(rest)))
            inv = np.argsort(axes + rest)
            surv = QuantumState(state.register, np.transpose(full, inv).reshape(-1))
        if p > ATOL:
            surv = surv.normalized()
        branches.append(BranchRecord(outcomes, p, surv))
    return branches


def fidelity(state: QuantumState, reference: QuantumState) -> float:
    """|<reference|state>|^2 for the normalized states (registers aligned by label)."""
    if sorted(state.labels) != sorted(reference.labels):
        raise ValueError(f"register mismatch: {state.labels} vs {reference.labels}")
    if state.labels != reference.labels:
        state = state.reorder(reference.labels)
    a = state.amplitudes / np.sqrt(state.norm2())
    b = reference.amplitudes / np.sqrt(reference.norm2())
    return float(min(1.0, abs(np.vdot(b, a)) ** 2))


def equal_up_to_phase(a: QuantumState, b: QuantumState, atol: float = 1e-9) -> bool:
    return fidelity(a, b) > 1 - atol


@dataclass
class Ensemble:
    """Classical mixture of pure states sharing one register."""

    components: list[tuple[float, QuantumState]]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("an ensemble needs at least one component")
        if any(w < -ATOL for w, _ in self.components):
            raise ValueError("ensemble weights must be non-negative")
        regs = {tuple(sorted(s.labels)) for _, s in self.components}
        if len(regs) != 1:
            raise ValueError("all ensemble components must share one register")

    @property
    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.components))

    def normalized(self) -> "Ensemble":
        tot = self.total_weight
        return Ensemble([(w / tot, s) for w, s in self.components])

    def compress(self, atol: float = 1e-9) -> "Ensemble":
        """Merge components that coincide up to a global phase."""
        merged: list[tuple[float, QuantumState]] = []
        for w, s in self.components:
            for i, (w2, s2) in enumerate(merged):
                if equal_up_to_phase(s, s2, atol):
                    merged[i] = (w2 + w, s2)
                    break
            else:
                merged.append((w, s))
        return Ensemble(merged)

    def _weighted_columns(self) -> tuple[tuple[str, ...], np.ndarray]:
        """Register labels and the matrix whose columns are ``sqrt(w) * psi / |psi|``."""
        labels = self.components[0][1].labels
        cols = []
        for w, s in self.components:
            v = s.reorder(labels).amplitudes if s.labels != labels else s.amplitudes
            cols.append(v * np.sqrt(w / s.norm2()))
        return labels, np.column_stack(cols)

    def density_matrix(self) -> tuple[tuple[str, ...], np.ndarray]:
        """Register labels (taken from the first component) and the weighted density matrix."""
        labels, m = self._weighted_columns()
        return labels, m @ m.conj().T

    def spectral(self, rtol: float = 1e-12, max_dimension: int = 1024) -> "Ensemble":
        """Equivalent ensemble of density-matrix eigenvectors, heaviest first.

        Any ensemble collapses to at most ``dimension`` components this way, and every
        linear observable is unchanged.  The eigenvectors come from a thin SVD of the
        weighted component matrix, so the density matrix itself is never formed.
        Registers above ``max_dimension`` fall back to :meth:`compress`.
        """
        first = self.components[0][1]
        if first.dimension > max_dimension:
            return self.compress()
        labels, m = self._weighted_columns()
        u, sv, _ = np.linalg.svd(m, full_matrices=False)
        vals = sv**2
        register = tuple(first.subsystem(lb) for lb in labels)
        keep = np.flatnonzero(vals > rtol * max(vals.max(), 0))
        return Ensemble([(float(vals[i]), QuantumState(register, u[:, i])) for i in keep])

    def fidelity(self, reference: QuantumState) -> float:
        tot = self.total_weight
        return sum(w * fidelity(s, reference) for w, s in self.components) / tot

    def weight_of(self, reference: QuantumState, atol: float = 1e-9) -> float:
        """Total normalized weight of components equal to ``reference`` up to phase."""
        tot = self.total_weight
        return sum(w for w, s in self.components if equal_up_to_phase(s, reference, atol)) / tot

    def __len__(self) -> int:
        return len(self.components)


def mix_map(
    ensemble: Ensemble,
    f: Callable[[QuantumState], Iterable[BranchRecord]],
    keep: Callable[[BranchRecord], bool] | None = None,
) -> tuple[Ensemble | None, float]:
    """Run a branching pure-state protocol on every component.

    Branch probabilities are folded into the weights.  Returns the renormalized
    ensemble of kept survivors (``None`` when nothing survives) and the total
    survival probability.
    """
    out: list[tuple[float, QuantumState]] = []
    tot = ensemble.total_weight
    for w, s in ensemble.components:
        for br in f(s):
            if keep is not None and not keep(br):
                continue
            if br.probability > ATOL and br.survivor is not None:
                out.append((w / tot * br.probability, br.survivor))
    survival = sum(w for w, _ in out)
    if not out or survival <= 0:
        return None, 0.0
    return Ensemble([(w / survival, s) for w, s in out]), float(survival)


def partial_overlap(state: QuantumState, targets: str | Sequence[str], vector: np.ndarray) -> float:
    """Weight <psi|(|v><v| x 1)|psi> / <psi|psi> of ``vector`` on the selected DOFs."""
    axes = state.axes(targets)
    d = 2 ** len(axes)
    v = np.asarray(vector, dtype=complex).reshape(-1)
    if v.size != d:
        raise ValueError(f"vector of length {v.size} does not match the {d}-dim target")
    rest = [a for a in range(state.nqubits) if a not in axes]
    moved = np.transpose(state.tensor_view(), axes + rest).reshape(d, -1)
    proj = v.conj() @ moved
    return float(np.vdot(proj, proj).real / (np.vdot(v, v).real * state.norm2()))
