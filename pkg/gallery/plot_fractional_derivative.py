"""
Fractional derivative of a power law
====================================

The Grunwald-Letnikov sum on a uniform grid, checked against the closed
form of the Caputo derivative of t**2:

    D^q t^2 = Gamma(3) / Gamma(3 - q) * t^(2 - q)

Run from the repository root::

    python gallery/plot_fractional_derivative.py
"""

import math
from pathlib import Path

import numpy as np

from fdsmc_robot import SampledSignal, caputo_gl, frac_integral, gl_weights

out = Path("gallery_out")
out.mkdir(exist_ok=True)

###############################################################################
# The weights decay like k^-(1+q), so a finite memory is a truncation of a
# slowly converging tail. The first few:

print(gl_weights(0.7, 6))

###############################################################################
# First-order accuracy: halving h roughly halves the error.

for h in (2e-3, 1e-3, 5e-4):
    f = SampledSignal.from_function(lambda t: t**2, 0.0, 1.0, h)
    g = caputo_gl(f, 0.7, memory_len=len(f))
    t = f.times
    m = t >= 0.1
    exact = math.gamma(3) / math.gamma(2.3) * t[m] ** 1.3
    print(f"h={h:g}  max rel err {np.max(np.abs(g.values[m] - exact) / exact):.2e}")

###############################################################################
# Integrating back with order 0.7 recovers the signal to roundoff: the
# discrete weight sequences of orders q and -q are inverse power series.

back = frac_integral(g, 0.7, memory_len=len(g))
print("round trip max abs err", np.max(np.abs(back.values - f.values)))

###############################################################################
# A constant has zero Caputo derivative, exactly, because the sum runs on
# f - f(0).

c = caputo_gl(SampledSignal(np.full(500, 3.7), 1e-3), 0.7)
print("constant:", np.all(c.values == 0.0))
