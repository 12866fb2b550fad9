"""Fourier pairs, decomposition residuals and tail exponents of the four kernels."""

import argparse

import numpy as np

from roughwave.kernels import (
    KernelKind,
    KernelSpec,
    tail_exponent_fit,
    verify_decomposition_space,
    verify_fourier_pair,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.55, 0.7, 0.85])
    ap.add_argument("--t", type=float, default=1.0)
    args = ap.parse_args()

    print("kernel,alpha,fourier_max_error,tail_exponent,expected_tail")
    for a in args.alphas:
        for kind, expected in ((KernelKind.POISSON_E, -2.0), (KernelKind.SINE_S_ALPHA, a - 2.0),
                               (KernelKind.COSINE_C_ONE_MINUS_ALPHA, -1.0 - a)):
            spec = KernelSpec(kind, a)
            err = verify_fourier_pair(spec, args.t)
            slope = tail_exponent_fit(spec, args.t, x_range=(64.0, 4096.0))
            print(f"{kind.value},{a},{err:.3e},{slope:.4f},{expected:.4f}")

    u = np.linspace(-1.5, 1.5, 61)
    res = verify_decomposition_space(1.0, 0.2, 0.6, u, 0.7, 0.7)
    print()
    print("u,space_residual")
    for x, r in zip(u, res):
        print(f"{x:.3f},{r:.3e}")


if __name__ == "__main__":
    main()
