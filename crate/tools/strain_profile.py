"""Synthetic strain-per-zero-point-motion linecut near a slit end.

Lorentzian decay from the slit tip, peak 1.82e-8 (400 Hz for a bismuth
donor at 22 GHz/strain) and 30 nm half width. A stand-in for a finite
element export in the same two-column format.

    python3 tools/strain_profile.py > crates/core/data/profiles/strain_slit.txt
"""

import numpy as np

PEAK = 1.82e-8
HALF_WIDTH = 30e-9

d = np.linspace(0.0, 300e-9, 121)
strain = PEAK / (1.0 + (d / HALF_WIDTH) ** 2)
print("# Strain per x_zpf along a linecut from the slit end (synthetic shape)")
print(f"# Lorentzian, peak {PEAK:.3g}, half width {HALF_WIDTH*1e9:.0f} nm")
print("# generated by tools/strain_profile.py")
print("# distance_m strain")
for di, si in zip(d, strain):
    print(f"{di:.6e} {si:.6e}")
