"""Regenerates erfcx_mpmath.csv: 1000 reference values of exp(x^2) erfc(x) at 40 digits."""
import random

import mpmath as mp

mp.mp.dps = 40
random.seed(12345)
xs = [random.uniform(-6, 6) for _ in range(500)]
xs += [10 ** random.uniform(0.7, 8) for _ in range(400)]
xs += [random.uniform(-26, -6) for _ in range(100)]
with open("erfcx_mpmath.csv", "w") as f:
    f.write("x,erfcx\n")
    for x in xs:
        x = float(x)
        f.write("%r,%s\n" % (x, mp.nstr(mp.exp(mp.mpf(x) ** 2) * mp.erfc(mp.mpf(x)), 20)))
