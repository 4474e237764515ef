"""NFFT-based fast summation for Gaussian kernels."""

from .fourier import (FourierKernel, adjoint_ndft, cached_fourier_kernel,
                      coefficients_from_samples, ndft, periodize_and_transform)
from .kernel import FastGaussKernel, FastSumParams, fast_gauss_apply
from .nfft import NfftPlan, adjoint_nfft, kb_window, kb_window_hat, nfft
from .regularized import (RegularizedKernel, build_boundary_polynomial,
                          gaussian_derivative, one_sided_derivative)

__all__ = [
    "FastGaussKernel", "FastSumParams", "FourierKernel", "NfftPlan",
    "RegularizedKernel", "adjoint_ndft", "adjoint_nfft", "build_boundary_polynomial",
    "cached_fourier_kernel", "coefficients_from_samples", "fast_gauss_apply",
    "gaussian_derivative", "kb_window", "kb_window_hat", "ndft", "nfft",
    "one_sided_derivative", "periodize_and_transform",
]
