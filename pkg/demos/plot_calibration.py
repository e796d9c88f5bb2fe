"""
Calibrating electronic noise from a shot-noise line
===================================================

Detector output variance grows linearly with LO power. The slope of that
line gives the shot-noise scale, and the dark variance divided by the
shot noise at the working point is the electronic noise in snu.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mmcvqkd.detector import calibrate_from_variance_samples, format_calibration

rng = np.random.default_rng(0)
powers = np.linspace(0.1e-3, 2e-3, 15)
dark = 60.0
slope = 3.0e5

# one mode, then three identical modes sharing the detector
for modes in (1, 3):
    var = dark + modes * slope * powers + rng.normal(0, 2.0, powers.size)
    res = calibrate_from_variance_samples(zip(powers, var), dark, reference_power=1e-3)
    print(f"--- {modes} mode(s)")
    print(format_calibration(res))
    plt.plot(powers * 1e3, var, "o", label=f"{modes} mode(s)")
    plt.plot(powers * 1e3, res.intercept + res.slope * powers, "-", color="gray")

plt.xlabel("LO power (mW)")
plt.ylabel("output variance (a.u.)")
plt.legend()
plt.tight_layout()
plt.savefig("calibration.png", dpi=120)
