#!/usr/bin/env python3
# Can stronger noise coupling protect coherence?
#
# On resonance the damping of the split peaks behaves like
# g0^2 gamma / (g0^2 + (pi gamma delta)^2): linear in gamma while the peak
# is narrower than the splitting, falling as 1/gamma once it is broader.
# Past pi*gamma*delta = g0, coupling the oscillator harder to the bath
# *reduces* the qubit decoherence.  Off resonance there is no such reversal.

import math

import numpy as np

from strucbath import (fit_decay_rate, lorentzian, map_g0_to_alpha,
                       peak_damping_estimate, solve_trwa)

g0, delta = 0.1, 1.0
crossover = g0 / (math.pi * delta)
print(f"crossover at gamma = g0/(pi delta) = {crossover:.4f}")

gammas = [0.005, 0.01, 0.02, crossover, 0.1, 0.2, 0.4]
print("\n  gamma     estimate      fitted envelope rate (on resonance)")
tt = np.linspace(0.0, 200.0, 4001)
for gamma in gammas:
    est = peak_damping_estimate(g0, gamma, delta)
    alpha = map_g0_to_alpha(g0, gamma, 1.0)
    sol = solve_trwa(lorentzian(alpha, 1.0, gamma), delta)
    rate = fit_decay_rate(tt, sol.population_grid(tt), window=math.pi / g0)
    print(f"  {gamma:<8.4f}  {est:.5f}      {rate:.5f}")

print("\noff resonance (delta = 0.1 omega0) the rate only grows with gamma:")
tt2 = np.linspace(0.0, 3000.0, 4001)
for gamma in (0.01, 0.1, 0.5):
    alpha = map_g0_to_alpha(0.01, gamma, 1.0)
    sol = solve_trwa(lorentzian(alpha, 1.0, gamma), 0.1)
    rate = fit_decay_rate(tt2, sol.population_grid(tt2),
                          window=3.0 * 2.0 * math.pi / 0.1)
    print(f"  gamma={gamma:<5g} rate = {rate:.3e}")
