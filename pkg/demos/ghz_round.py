"""
One purification round on three-photon GHZ states
=================================================

Two copies of a mixed three-photon hyperentangled GHZ state are compared with
three parity checks.  Copies that agree in both degrees of freedom are kept;
copies that agree in only one are paired up and repaired by moving the good
polarization state across with three single-photon joins.
"""

from hyperepp.epp import GhzMixture, GhzRoundResult, ghz_efficiency, ghz_improvement_threshold, ghz_recurrence, run_ghz_round

# Polarization classes F0..F3 and spatial phase classes P0, P1.
m = GhzMixture(0.7, 0.1, 0.1, 0.1, 0.7, 0.3)

# The circuit works on a 6-photon register plus spins.  Thousands of
# measurement branches are compressed into a handful of mixture components.
res = run_ghz_round(m)
for cls, p in res.class_probabilities.items():
    print(f"{cls.value:8s} p = {p:.6f}")

for name, ens in (("keep", res.keep), ("joined", res.joined)):
    w = GhzRoundResult.weights(ens)
    print(f"{name:6s} F0' = {w.F0:.6f}  P0' = {w.P0:.6f}  ({len(ens)} components)")

pred = ghz_recurrence(m)
print(f"recurrence F0' = {pred.F0:.6f}  P0' = {pred.P0:.6f}")
print(f"Y0 = {ghz_efficiency(m, False):.4f}, Y = {ghz_efficiency(m, True):.4f}")

# Below the threshold, a round lowers F0 instead of raising it.
T = ghz_improvement_threshold(0.1, 0.1)
print(f"threshold on F0 for F1 = F2 = 0.1: {T:.4f}")
for F0 in (T - 0.05, T + 0.05):
    low = GhzMixture(F0, 0.1, 0.1, 0.8 - F0, 0.7, 0.3)
    print(f"F0 = {F0:.4f} -> {ghz_recurrence(low).F0:.4f}")
