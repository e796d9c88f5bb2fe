"""
Electronic noise of a fast homodyne detector
============================================

A transimpedance amplifier with a fixed gain-bandwidth product has to
trade gain for bandwidth. Expressed in shot-noise units the electronic
noise therefore grows with the repetition rate, and falls with LO power.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from dataclasses import replace

from mmcvqkd.detector import DetectorParams, RepRateScenario, detector_from_scenario, electronic_noise_snu

# reference detector: 3 MHz bandwidth at a gain of 4000, 1 mW LO
base = DetectorParams()
print("reference point:", electronic_noise_snu(base), "snu")

rates = np.geomspace(1e6, 3e9, 60)
v_rate = [electronic_noise_snu(detector_from_scenario(RepRateScenario(r), base)) for r in rates]

# at 1 GHz, sweep the LO power instead
ghz = detector_from_scenario(RepRateScenario(1e9), base)
powers = np.geomspace(1e-4, 1e-1, 40)
v_lo = [electronic_noise_snu(replace(ghz, lo_power=p)) for p in powers]

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
ax1.loglog(rates, v_rate)
ax1.set_xlabel("repetition rate (Hz)")
ax1.set_ylabel("v_ele (snu)")
ax2.loglog(powers * 1e3, v_lo)
ax2.set_xlabel("LO power (mW)")
ax2.set_title("1 GHz")
fig.tight_layout()
fig.savefig("detector_noise.png", dpi=120)
