"""
Chaos from actuator dead time
=============================

A two-link arm under plain PD tracking is well behaved with a 1 ms
dead time and turns irregular at 15 ms. This script shows both sides:
the theta2 maxima, a Poincare section and the largest Lyapunov exponent.

Takes about a minute.
"""

from pathlib import Path

import numpy as np

from fdsmc_robot import ScenarioConfig, chaos_kit as ck, simulate
from fdsmc_robot._csvio import write_columns
from fdsmc_robot._svg import PlotSpec, render

out = Path("gallery_out")
out.mkdir(exist_ok=True)

###############################################################################
# Two dead times, same everything else. Transient of 100 s dropped.

runs = {L: simulate(ScenarioConfig(mode="single_pd", t_end=300.0, delay_slave=L)) for L in (0.001, 0.015)}
for L, tr in runs.items():
    peaks = ck.local_maxima(tr.segment(100.0).theta[:, 1])
    print(f"L={L * 1e3:.0f} ms: {len(peaks)} maxima, spread {ck.maxima_spread(peaks):.3g} rad, "
          f"{ck.distinct_values(peaks)} distinct")

###############################################################################
# Poincare section of the chaotic run at theta1 = 0.5 rad, upward crossings.
# A periodic orbit would give a handful of points; here they scatter.

tr = runs[0.015].segment(100.0)
pts = ck.poincare_section(tr, 0.5, +1)
write_columns(out / "poincare.csv", ("theta2", "omega2"), (pts[:, 0], pts[:, 1]))
spec = PlotSpec(x="theta2", y=["omega2"], kind="scatter", title="Poincare section, L = 15 ms",
                xlabel="theta2 [rad]", ylabel="omega2 [rad/s]")
(out / "poincare.svg").write_text(render(spec, {"theta2": pts[:, 0], "omega2": pts[:, 1]}))

###############################################################################
# Rosenstein estimate on theta2 resampled at 10 ms. Positive means nearby
# trajectories separate on average.

for L, tr in runs.items():
    x = ck.downsample(tr.segment(100.0).theta[:, 1], tr.h)
    est = ck.max_lyapunov(x, ck.DIAG_DT)
    print(f"L={L * 1e3:.0f} ms: lambda_max {est.exponent:+.4f} 1/s  (fit {est.fit_range}, {est.n_pairs} pairs)")
