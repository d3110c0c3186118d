"""Double-sided QD-cavity input-output coefficients and spin-dependent scattering.

Rates are in units of the cavity decay rate ``kappa``.  Frequencies are stored as
offsets from a common reference, so resonance is ``omega_c = omega_x = omega = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevec import Kind, QuantumState, apply_local

_DENOM_EPS = 1e-15
_PASSIVITY_TOL = 1e-9


@dataclass(frozen=True)
class CavityParams:
    g: float
    kappa: float = 1.0
    kappa_s: float = 0.0
    gamma: float = 0.1
    omega_c: float = 0.0
    omega_x: float = 0.0
    omega: float = 0.0

    def __post_init__(self) -> None:
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.kappa_s < 0 or self.gamma < 0 or self.g < 0:
            raise ValueError("g, kappa_s and gamma must be non-negative")

    @classmethod
    def from_ratios(cls, g_ratio: float, ks_ratio: float, gamma: float = 0.1, kappa: float = 1.0, **detunings: float) -> "CavityParams":
        """Build from the plotting axes g/(kappa+kappa_s) and kappa_s/kappa."""
        ks = ks_ratio * kappa
        return cls(g=g_ratio * (kappa + ks), kappa=kappa, kappa_s=ks, gamma=gamma * kappa, **detunings)

    @property
    def g_ratio(self) -> float:
        return self.g / (self.kappa + self.kappa_s)

    @property
    def ks_ratio(self) -> float:
        return self.kappa_s / self.kappa


@dataclass(frozen=True)
class ScatteringCoefficients:
    r: complex
    t: complex
    r0: complex
    t0: complex

    def __post_init__(self) -> None:
        if abs(self.r) ** 2 + abs(self.t) ** 2 > 1 + _PASSIVITY_TOL:
            raise ValueError(f"coupled coefficients violate passivity: |r|^2+|t|^2 = {abs(self.r)**2 + abs(self.t)**2}")
        if abs(self.r0) ** 2 + abs(self.t0) ** 2 > 1 + _PASSIVITY_TOL:
            raise ValueError(f"uncoupled coefficients violate passivity: |r0|^2+|t0|^2 = {abs(self.r0)**2 + abs(self.t0)**2}")

    def moduli(self) -> tuple[float, float, float, float]:
        return (abs(self.r), abs(self.t), abs(self.r0), abs(self.t0))

    @classmethod
    def from_params(cls, params: CavityParams) -> "ScatteringCoefficients":
        r, t = coupled_coefficients(params)
        r0, t0 = uncoupled_coefficients(params)
        return cls(r, t, r0, t0)


IDEAL = ScatteringCoefficients(1.0, 0.0, 0.0, 1.0)


def coupled_coefficients(params: CavityParams) -> tuple[complex, complex]:
    """(r, t) with the dot coupled to the cavity mode."""
    p = params
    dx = 1j * (p.omega_x - p.omega) + p.gamma / 2
    dc = 1j * (p.omega_c - p.omega) + p.kappa + p.kappa_s / 2
    den = dx * dc + p.g**2
    if abs(den) < _DENOM_EPS:
        raise ValueError("non-physical parameter set: vanishing denominator in the coupled coefficients")
    t = -p.kappa * dx / den
    return 1 + t, t


def uncoupled_coefficients(params: CavityParams) -> tuple[complex, complex]:
    """(r0, t0) for the bare cavity (dot decoupled)."""
    p = params
    den = 1j * (p.omega_c - p.omega) + p.kappa + p.kappa_s / 2
    if abs(den) < _DENOM_EPS:
        raise ValueError("non-physical parameter set: vanishing denominator in the uncoupled coefficients")
    return (1j * (p.omega_c - p.omega) + p.kappa_s / 2) / den, -p.kappa / den


def resonant_moduli(g_ratio: float, ks_ratio: float, gamma: float = 0.1) -> tuple[float, float, float, float]:
    """(|r|, |t|, |r0|, |t0|) at exact resonance, the operating point of every preset."""
    return ScatteringCoefficients.from_params(CavityParams.from_ratios(g_ratio, ks_ratio, gamma)).moduli()


# photon index 2*pol + spatial, pol 0=R 1=L, spatial 0=i1 1=i2; spin 0=up 1=down
def _idx(pol: int, sp: int, e: int) -> int:
    return (2 * pol + sp) * 2 + e


_R, _L, _I1, _I2, _UP, _DOWN = 0, 1, 0, 1, 0, 1


def scattering_matrix(r: float, t: float, r0: float, t0: float) -> np.ndarray:
    """8x8 map on photon (x) spin for the non-ideal reflection/transmission rules.

    Basis states where the photon couples to the dot pick up ``|r|`` on a polarization
    flip and ``-|t|`` on a port flip; uncoupled ones get ``-|t0|`` on a port flip and
    ``|r0|`` on a polarization flip.  (1, 0, 0, 1) gives the ideal rules.
    """
    m = np.zeros((8, 8))
    coupled = [(_R, _I2, _UP), (_L, _I1, _UP), (_R, _I1, _DOWN), (_L, _I2, _DOWN)]
    uncoupled = [(_R, _I1, _UP), (_L, _I2, _UP), (_R, _I2, _DOWN), (_L, _I1, _DOWN)]
    for pol, sp, e in coupled:
        src = _idx(pol, sp, e)
        m[_idx(1 - pol, sp, e), src] += r
        m[_idx(pol, 1 - sp, e), src] += -t
    for pol, sp, e in uncoupled:
        src = _idx(pol, sp, e)
        m[_idx(pol, 1 - sp, e), src] += -t0
        m[_idx(1 - pol, sp, e), src] += r0
    return m


IDEAL_MATRIX = scattering_matrix(1.0, 0.0, 0.0, 1.0)


def _check_pair(state: QuantumState, photon: str, spin: str) -> None:
    if state.subsystem(photon).kind is not Kind.PHOTON:
        raise ValueError(f"{photon!r} is not a photon")
    if state.subsystem(spin).kind is not Kind.SPIN:
        raise ValueError(f"{spin!r} is not an electron spin")


def _moduli(coeffs) -> tuple[float, float, float, float]:
    if isinstance(coeffs, ScatteringCoefficients):
        return coeffs.moduli()
    vals = tuple(float(abs(c)) for c in coeffs)
    ScatteringCoefficients(*vals)  # passivity check
    return vals


def check_rule_passivity(moduli: tuple[float, float, float, float]) -> None:
    """Reject moduli for which the rule matrix can amplify a state.

    The largest singular value of :func:`scattering_matrix` is
    ``max(|r|+|t|, |r0|+|t0|)``.  Both sums equal 1 at resonance; detuning breaks
    this, because the modulus-form rules drop the phases of r and t.
    """
    r, t, r0, t0 = moduli
    worst = max(r + t, r0 + t0)
    if worst > 1 + _PASSIVITY_TOL:
        raise ValueError(
            f"modulus-form scattering rules would amplify the state (|r|+|t| or |r0|+|t0| = {worst:.6g} > 1); "
            "they describe resonant operation only"
        )


def apply_ideal_scattering(state: QuantumState, photon: str, spin: str) -> QuantumState:
    _check_pair(state, photon, spin)
    return apply_local(state, [photon, spin], IDEAL_MATRIX)


def apply_nonideal_scattering(state: QuantumState, photon: str, spin: str, coeffs) -> tuple[QuantumState, float]:
    """Apply the lossy rules; returns the unnormalized image and its squared norm."""
    _check_pair(state, photon, spin)
    mod = _moduli(coeffs)
    check_rule_passivity(mod)
    out = apply_local(state, [photon, spin], scattering_matrix(*mod))
    return out, out.norm2() / state.norm2()
