"""Edge response of the nonlocal detector and the classical baselines on the 24-sample profile.

    python scripts/profile_edges.py --delta 8 --sigma 0.02
"""

import argparse

import numpy as np

from acseg.baseline_edge import BaselineSpec, canny_detect, gradient_detect, log_detect
from acseg.image_core import profile_i1
from acseg.nonlocal_edge import KernelSpec, apply_nonlocal_laplacian, coefficients


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--delta", type=int, default=8)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=0.02)
    args = ap.parse_args()

    img = profile_i1()
    field = apply_nonlocal_laplacian(img, coefficients(KernelSpec(args.delta, args.alpha)))[0]
    np.set_printoptions(precision=3, suppress=True, linewidth=160)
    print("index     ", " ".join(f"{i:>5d}" for i in range(24)))
    print("intensity ", " ".join(f"{v:>5.2f}" for v in img[0]))
    print("nonlocal  ", " ".join(f"{v:>5.2f}" for v in field))
    rows = {
        "nonlocal": (field >= args.sigma).astype(int),
        "sobel": gradient_detect(img, BaselineSpec("sobel", threshold=0.5))[16],
        "log": log_detect(img, 1.0, 1e-3)[16],
        "canny": canny_detect(img, 0.1, 0.3, 1.0)[16],
    }
    for name, row in rows.items():
        print(f"{name:<10}", " ".join(f"{v:>5d}" for v in row))


if __name__ == "__main__":
    main()
