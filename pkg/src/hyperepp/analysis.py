"""Closed-form non-ideal fidelities and efficiencies, brute-force oracles and sweeps.

All quantities take coefficient moduli ``(|r|, |t|, |r0|, |t0|)``, either as a tuple or
as a :class:`~hyperepp.cavity.ScatteringCoefficients`.  Grid sweeps evaluate them at
exact resonance with ``gamma = 0.1 kappa``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .cavity import _moduli, resonant_moduli
from .protocol_primitives import (
    KET_I1,
    KET_I2,
    KET_PLUS,
    hyperentangled_bell,
    psqnd_phase_check,
    qsjm_transfer,
    single_photon,
    with_spins,
)
from .statevec import fidelity


# --- closed forms -------------------------------------------------------------------------
@dataclass(frozen=True)
class AppendixTerms:
    m: tuple[float, ...]  # m1..m9
    n: tuple[float, ...]  # n1..n8


def appendix_terms(coeffs) -> AppendixTerms:
    """Intermediate m- and n-terms of the P-S-QND and QSJM fidelity formulas.

    Two readings differ from the printed source.  The stray "|" before the opening
    parenthesis in n3, n4, n7 and n8 is read as "+(".  The last products of n5 and n6
    use (|t0| - |r0|), mirroring n1 and n2.  With (|t0| + |r0|) the quoted operating
    point values are missed by 1 to 5 percentage points; with the sign flipped they
    are reproduced to within 0.05 points.
    """
    r, t, r0, t0 = _moduli(coeffs)
    R, T, R0, T0 = r * r, t * t, r0 * r0, t0 * t0
    m = (
        (T + R) * T0 + (T0 + R0) * R0,
        (T + R) * R + (T0 + R0) * T,
        (T + R) * R0 + (T0 + R0) * T0,
        (T + R) * T + (T0 + R0) * R,
        2 * (T0 * R0 + R * T) * (T0 + T + R0 + R) ** 2,
        4 * T0 * R * (T + R0) ** 2,
        4 * T0 * T * (R0 + R) ** 2,
        4 * R0 * R * (T0 + T) ** 2,
        4 * R0 * T * (T0 + R) ** 2,
    )
    n = (
        (t + r) * r + (r - t) * t + (t0 + r0) * r - (t0 - r0) * t,
        (t + r) * t + (r - t) * r + (t0 + r0) * t - (t0 - r0) * r,
        (t0 + r0) * t0 - (r0 - t0) * r0 + (t + r) * t0 - (r - t) * r0,
        (t0 + r0) * r0 - (r0 - t0) * t0 + (t + r) * r0 - (r - t) * t0,
        (t + r) * t0 + (r - t) * r0 + (t0 + r0) * t0 - (t0 - r0) * r0,
        (t + r) * r0 + (r - t) * t0 + (t0 + r0) * r0 - (t0 - r0) * t0,
        (t0 + r0) * r - (r0 - t0) * t + (t + r) * r - (r - t) * t,
        (t0 + r0) * t - (r0 - t0) * r + (t + r) * t - (r - t) * r,
    )
    return AppendixTerms(m, n)


def _power_sum(coeffs) -> float:
    return sum(x * x for x in _moduli(coeffs))


def closed_form_psqnd(coeffs) -> tuple[float, float]:
    """(F_p, eta_p) of the non-ideal P-S-QND for the even-parity mode."""
    m = appendix_terms(coeffs).m
    num = sum(m[:4]) ** 2
    den = 4 * (sum(x * x for x in m[:4]) + sum(m[4:]))
    return num / den, _power_sum(coeffs) ** 4 / 16


def closed_form_qsjm(coeffs) -> tuple[float, float]:
    """(F_j, eta_j) of the non-ideal QSJM."""
    r, t, r0, t0 = _moduli(coeffs)
    n = appendix_terms(coeffs).n
    den = 2 * sum(x * x for x in n) * ((r + t) ** 2 + (r0 + t0) ** 2)
    if den == 0:
        raise ValueError("degenerate coefficients: zero denominator in the QSJM fidelity")
    return (r + t + r0 + t0) ** 2 * (r + t0) ** 4 / den, _power_sum(coeffs) ** 3 / 8


def two_step_checkpoints(coeffs) -> tuple[float, float, float, float]:
    """(F_1step, eta_1step, F_2step, eta_2step).

    The first step runs two P-S-QNDs and the second step two QSJMs, so each figure is
    the square of the corresponding single-device value.
    """
    fp, ep = closed_form_psqnd(coeffs)
    fj, ej = closed_form_qsjm(coeffs)
    return fp * fp, ep * ep, fj * fj, ej * ej


# --- oracles -----------------------------------------------------------------------------
def oracle_psqnd(coeffs) -> tuple[float, float]:
    """Brute-force P-S-QND on phi_1 (x) phi_1 (the even-parity, zero-phase mode).

    Returns (fidelity, success probability).  The fidelity is the weight of the
    branches reporting the correct phases, times their overlap with the input, over
    the total success probability.
    """
    state = hyperentangled_bell(1, 1)
    _, _, branches = psqnd_phase_check(state, coeffs=coeffs)
    eta = sum(br.probability for br in branches)
    good = sum(
        br.probability * fidelity(br.survivor, state)
        for br in branches
        if br.tag.phase_pol == 0 and br.tag.phase_spat == 0
    )
    return good / eta, eta


_QUADRATURE = np.array([1, 1j]) / np.sqrt(2)
_EQUAL_SPATIAL = (KET_I1 + KET_I2) / np.sqrt(2)


def oracle_qsjm(coeffs) -> tuple[float, float]:
    """Brute-force single-photon QSJM with quadrature polarization inputs.

    Both photons start in (|R> + i|L>)/sqrt2 (x) (|i1> + |i2>)/sqrt2.  Returns the
    success-weighted fidelity of the target against its ideal output and the total
    success probability.
    """
    src = single_photon("A", _QUADRATURE, _EQUAL_SPATIAL)
    tgt = single_photon("B", _QUADRATURE, _EQUAL_SPATIAL)
    ideal = single_photon("B", _QUADRATURE, _EQUAL_SPATIAL)
    joint = with_spins(src.tensor(tgt), ["e"], KET_PLUS)
    branches = qsjm_transfer(joint, "A", "B", "e", coeffs)
    eta = sum(br.probability for br in branches)
    fid = sum(br.probability * fidelity(br.survivor, ideal) for br in branches)
    return fid / eta, eta


# --- sweeps ------------------------------------------------------------------------------
QUANTITIES: dict[str, Callable] = {
    "Fp": lambda c: closed_form_psqnd(c)[0],
    "eta_p": lambda c: closed_form_psqnd(c)[1],
    "Fj": lambda c: closed_form_qsjm(c)[0],
    "eta_j": lambda c: closed_form_qsjm(c)[1],
    "F1step": lambda c: two_step_checkpoints(c)[0],
    "eta1step": lambda c: two_step_checkpoints(c)[1],
    "F2step": lambda c: two_step_checkpoints(c)[2],
    "eta2step": lambda c: two_step_checkpoints(c)[3],
}
ORACLES: dict[str, Callable] = {
    "Fp": lambda c: oracle_psqnd(c)[0],
    "eta_p": lambda c: oracle_psqnd(c)[1],
    "Fj": lambda c: oracle_qsjm(c)[0],
    "eta_j": lambda c: oracle_qsjm(c)[1],
}


def _strictly_increasing(xs: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(xs, xs[1:]))


@dataclass(frozen=True)
class SweepGrid:
    g_ratios: tuple[float, ...]
    ks_ratios: tuple[float, ...]
    gamma: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "g_ratios", tuple(float(x) for x in self.g_ratios))
        object.__setattr__(self, "ks_ratios", tuple(float(x) for x in self.ks_ratios))
        for name in ("g_ratios", "ks_ratios"):
            xs = getattr(self, name)
            if not xs:
                raise ValueError(f"{name} must not be empty")
            if not _strictly_increasing(xs):
                raise ValueError(f"{name} must be strictly increasing")
            if any(not math.isfinite(x) or x < 0 for x in xs):
                raise ValueError(f"{name} must be finite and non-negative")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @classmethod
    def linspace(cls, g_range: tuple[float, float, int], ks_range: tuple[float, float, int], gamma: float = 0.1) -> "SweepGrid":
        return cls(tuple(np.linspace(*g_range)), tuple(np.linspace(*ks_range)), gamma)

    def points(self) -> list[tuple[float, float]]:
        """Grid points in output order: ks_ratio outer, g_ratio inner."""
        return [(g, ks) for ks in self.ks_ratios for g in self.g_ratios]


@dataclass(frozen=True)
class CheckpointRow:
    g_ratio: float
    ks_ratio: float
    Fp: float
    eta_p: float
    Fj: float
    eta_j: float

    def __post_init__(self) -> None:
        for name in ("Fp", "eta_p", "Fj", "eta_j"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"{name}={v} is not a probability")

    @classmethod
    def at(cls, g_ratio: float, ks_ratio: float, gamma: float = 0.1) -> "CheckpointRow":
        c = resonant_moduli(g_ratio, ks_ratio, gamma)
        fp, ep = closed_form_psqnd(c)
        fj, ej = closed_form_qsjm(c)
        return cls(g_ratio, ks_ratio, fp, ep, fj, ej)


# operating points quoted with their single-device figures
CHECKPOINTS: tuple[tuple[float, float], ...] = ((0.5, 0.3), (2.4, 0.3), (2.4, 0.0), (1.0, 0.7))
# operating points quoted with two-step figures
TWO_STEP_CHECKPOINTS: tuple[tuple[float, float], ...] = ((2.4, 0.2), (2.4, 0.1))


@dataclass
class SweepTable:
    columns: list[str]
    rows: list[dict[str, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.rows, indent=1) + "\n"


def format_float(x: float) -> str:
    """17 significant digits: round-trips any IEEE double."""
    return f"{float(x):.17g}"


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, str)):
        return str(x)
    return format_float(x)


def _evaluate(point: tuple[float, float], gamma: float, quantities: Sequence[str], oracle: bool) -> dict[str, float]:
    g, ks = point
    c = resonant_moduli(g, ks, gamma)
    row = {"g_ratio": g, "ks_ratio": ks}
    for q in quantities:
        row[q] = float(QUANTITIES[q](c))
    if oracle:
        for q in quantities:
            if q in ORACLES:
                val = float(ORACLES[q](c))
                row[f"{q}_oracle"] = val
                row[f"{q}_residual"] = val - row[q]
    return row


def sweep(grid: SweepGrid, quantities: Iterable[str] = ("Fp", "eta_p", "Fj", "eta_j"), oracle: bool = False, threads: int | None = None) -> SweepTable:
    """Evaluate ``quantities`` at every grid point, rows sorted by (ks_ratio, g_ratio).

    With ``oracle=True`` every quantity that has a brute-force counterpart gets
    ``<name>_oracle`` and ``<name>_residual`` columns.  ``threads`` caps the worker
    pool; the output does not depend on it.
    """
    quantities = list(quantities)
    if not quantities:
        raise ValueError("at least one quantity is required")
    unknown = [q for q in quantities if q not in QUANTITIES]
    if unknown:
        raise ValueError(f"unknown quantities {unknown}; choose from {sorted(QUANTITIES)}")
    points = grid.points()
    workers = max(1, min(threads or 1, len(points)))
    if workers == 1:
        rows = [_evaluate(p, grid.gamma, quantities, oracle) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _evaluate(p, grid.gamma, quantities, oracle), points))
    columns = ["g_ratio", "ks_ratio"] + quantities
    if oracle:
        for q in quantities:
            if q in ORACLES:
                columns += [f"{q}_oracle", f"{q}_residual"]
    return SweepTable(columns, rows)
