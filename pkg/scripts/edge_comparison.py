"""FPR / FNR / RSE of each edge detector against the true boundary of a noisy disk.

The reference edge set is both pixels of every 4-adjacent pair straddling the
disk boundary, so detectors firing on either side of the step are treated alike.

    python scripts/edge_comparison.py --noise-std 0.05
"""

import argparse
import time

import numpy as np

from acseg.baseline_edge import BaselineSpec, detect
from acseg.image_core import ShapeSpec, add_gaussian_noise, synth_two_phase
from acseg.metrics import mask_metrics
from acseg.nonlocal_edge import KernelSpec, detect_edges
from acseg.segmentation import extract_contour


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--noise-std", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--delta", type=int, default=4)
    ap.add_argument("--sigma", type=float, default=0.05)
    args = ap.parse_args()

    clean, truth = synth_two_phase(args.size, args.size, ShapeSpec.disk(args.size / 4))
    img = add_gaussian_noise(clean, 0.0, args.noise_std, args.seed)
    ref = np.zeros_like(truth)
    for a, b in extract_contour(truth):
        ref[a] = ref[b] = 1

    detectors = {
        f"nonlocal(d={args.delta})": lambda x: detect_edges(x, KernelSpec(args.delta), args.sigma),
        "roberts": lambda x: detect(x, BaselineSpec("roberts", threshold=0.5)),
        "prewitt": lambda x: detect(x, BaselineSpec("prewitt", threshold=1.5)),
        "sobel": lambda x: detect(x, BaselineSpec("sobel", threshold=2.0)),
        "log": lambda x: detect(x, BaselineSpec("log", varsigma=1.5, zero_tol=0.02)),
        "canny": lambda x: detect(x, BaselineSpec("canny", low=0.5, high=1.5, varsigma=1.0)),
    }
    print(f"{'method':<14} {'fpr':>8} {'fnr':>8} {'rse':>8} {'cpu':>8}")
    for name, fn in detectors.items():
        t0 = time.process_time()
        mask = fn(img)
        cpu = time.process_time() - t0
        fpr, fnr, rse = mask_metrics(ref, mask)
        print(f"{name:<14} {fpr:>8.4f} {fnr:>8.4f} {rse:>8.4f} {cpu:>8.4f}")


if __name__ == "__main__":
    main()
