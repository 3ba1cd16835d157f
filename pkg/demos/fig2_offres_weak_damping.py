#!/usr/bin/env python3
# Off-resonance qubit (delta = 0.1 omega0), weak oscillator-bath coupling.
#
# pi*gamma*delta < g0 here, so the composite-system route (quapi2) applies:
# the qubit-oscillator pair is diagonalized in 400 dimensions, truncated to
# its two lowest eigenstates, and propagated against the short-memory Ohmic
# bath.  The analytic solver should be indistinguishable on this plot.

from strucbath import compare_engines, emit, preset, run

scenario = preset("fig2")
records = run(scenario)
paths = emit(records, "csv", "out")
try:
    paths += emit(records, "plot", "out")
except ImportError:
    pass
for p in paths:
    print("wrote", p)

report = compare_engines(records)
print(f"\nanalytic vs quapi2 (tolerance {report.tolerance}):")
for row in report.rows:
    print(f"  {row.other:<22s} sup = {row.sup_norm:.5f}  rms = {row.rms:.5f}"
          f"  [{'pass' if row.passed else 'FAIL'}]")
