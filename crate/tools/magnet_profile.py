"""Field-gradient profile of a saturated rectangular micromagnet.

Closed-form field of a uniformly magnetized cuboid (surface charge model),
evaluated on the line that leaves the centre of one side face. Writes the
two-column profile format read by `donors::load_profile`.

    python3 tools/magnet_profile.py > crates/core/data/profiles/magnet_310nm.txt
"""

import argparse

import numpy as np


def bz(x, y, z, half, mu0_ms):
    """z field [T] of a cuboid |x|<a, |y|<b, |z|<c magnetized along z."""
    a, b, c = half
    total = 0.0
    for i, xi in enumerate((-a, a)):
        for j, yj in enumerate((-b, b)):
            for k, zk in enumerate((-c, c)):
                dx, dy, dz = x - xi, y - yj, z - zk
                r = np.sqrt(dx * dx + dy * dy + dz * dz)
                total += (-1) ** (i + j + k) * np.arctan2(dx * dy, dz * r)
    return -mu0_ms / (4 * np.pi) * total


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--length", type=float, default=500e-9, help="extent across the beam [m]")
    p.add_argument("--width", type=float, default=500e-9, help="extent along the magnetization [m]")
    p.add_argument("--height", type=float, default=310e-9, help="thickness [m]")
    p.add_argument("--mu0-ms", type=float, default=1.8, help="saturation magnetization mu0*Ms [T] (cobalt)")
    p.add_argument("--start", type=float, default=5e-9)
    p.add_argument("--stop", type=float, default=1000e-9)
    p.add_argument("--points", type=int, default=200)
    args = p.parse_args()

    half = (args.length / 2, args.height / 2, args.width / 2)
    d = np.geomspace(args.start, args.stop, args.points)
    h = 1e-11
    x = half[0] + d
    grad = (bz(x + h, 0.0, 0.0, half, args.mu0_ms) - bz(x - h, 0.0, 0.0, half, args.mu0_ms)) / (2 * h)

    print("# Magnetic field gradient |dBz/dx| beside a saturated cuboid micromagnet")
    print(f"# {args.length*1e9:.0f} nm x {args.width*1e9:.0f} nm x {args.height*1e9:.0f} nm, mu0*Ms = {args.mu0_ms} T, magnetized along z")
    print("# line from the centre of the side face, mid-height; analytic surface-charge model")
    print("# generated by tools/magnet_profile.py")
    print("# distance_m gradient_T_per_m")
    for di, gi in zip(d, np.abs(grad)):
        print(f"{di:.6e} {gi:.6e}")


if __name__ == "__main__":
    main()
