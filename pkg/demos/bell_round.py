"""
One purification round on hyperentangled Bell pairs
===================================================

Two copies of a mixed hyperentangled pair are run through the full circuit:
spatial Hadamards, parity checks on AC and BD, classification of the detector
outcomes, and the join of the polarization-good and spatial-good groups.  The
circuit numbers are then set against the closed-form recurrence.
"""

import numpy as np

from hyperepp.cavity import resonant_moduli
from hyperepp.epp import BellMixture, StepOptions, bell_recurrence, iterate, run_bell_round

# A mixture with 80% polarization fidelity and 80% spatial fidelity.
m = BellMixture(0.8, 0.8)

# Run one ideal round.  Every measurement branch is enumerated, so the case
# probabilities are exact rather than sampled.
res = run_bell_round(m)
for case, p in res.case_probabilities.items():
    print(f"{case.value:15s} p = {p:.6f}")

# The kept pairs and the joined pairs carry the same mixture weights.
keep, joined = res.weights(res.keep), res.weights(res.joined)
print(f"keep   F1' = {keep.F1:.6f}  F2' = {keep.F2:.6f}")
print(f"joined F1' = {joined.F1:.6f}  F2' = {joined.F2:.6f}")

# The closed-form recurrence predicts the same numbers.
pred = bell_recurrence(m)
print(f"recurrence F1' = {pred.F1:.6f}  F2' = {pred.F2:.6f}")
print(f"yield without join Y0 = {res.Y0:.4f}, with join Y = {res.Y:.4f}")

# Iterating the recurrence shows how fast the joint fidelity climbs.
for point in iterate(bell_recurrence, m, 4):
    print(f"round {point.round}: joint fidelity {point.fidelity:.6f}")

# The same round with lossy cavities at g/(kappa+kappa_s) = 2.4, kappa_s/kappa = 0.1.
# Probabilities no longer sum to one; the remainder is photon loss.
lossy = run_bell_round(m, StepOptions(coeffs=resonant_moduli(2.4, 0.1)))
total = sum(lossy.case_probabilities.values())
w = lossy.weights(lossy.keep)
print(f"lossy round: success {total:.4f}, keep F1' = {w.F1:.4f}, F2' = {w.F2:.4f}")
print("loss relative to ideal:", np.round(1 - total, 4))
