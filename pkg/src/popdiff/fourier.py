"""Fourier transform and convolution on Z_n for arbitrary (prime-friendly) n.

The transform convention throughout the package is

    fhat(r) = (1/n) * sum_x f(x) e(x r / n),        e(t) = exp(2*pi*i*t),

with inversion f(x) = sum_r fhat(r) e(-x r / n).  Under this convention the
convolution (f*g)(x) = E_y[f(y) g(x-y)] satisfies (f*g)^hat = fhat * ghat.

Domain sizes here are primes or products of distinct primes, so radix FFTs do
not apply directly.  Small transforms use the direct O(n^2) sum; larger ones
use a Bluestein chirp reduction to a power-of-two FFT.  Chirp exponents are
reduced mod 2n in integer arithmetic before any trigonometry, which keeps the
phase error flat in n (error budget ~1e-9*n, absorbed by 1e-8 tolerances).
"""

from __future__ import annotations

import numpy as np

from .domains import CYCLIC, PRODUCT, DensityFn, Spectrum
from .errors import DomainError

DIRECT_CUTOFF = 4096

_IMAG_TOL = 1e-7


def _transform_direct(vec: np.ndarray, sign: int) -> np.ndarray:
    # row-chunked so the phase matrix never exceeds a few MB
    n = len(vec)
    out = np.empty(n, dtype=np.complex128)
    x = np.arange(n, dtype=np.int64)
    chunk = max(1, (1 << 21) // max(n, 1))
    for lo in range(0, n, chunk):
        r = np.arange(lo, min(lo + chunk, n), dtype=np.int64)
        phase = (r[:, None] * x[None, :]) % n
        out[lo : lo + len(r)] = np.exp((sign * 2j * np.pi / n) * phase) @ vec
    return out


def _transform_bluestein(vec: np.ndarray, sign: int) -> np.ndarray:
    n = len(vec)
    # x*r = (x^2 + r^2 - (x-r)^2) / 2, so e(x r/n) factors into half-square
    # chirps w^(x^2) w^(r^2) w^(-(x-r)^2) with w = exp(sign*pi*i/n) of order 2n.
    sq = (np.arange(n, dtype=np.int64) ** 2) % (2 * n)
    chirp = np.exp((sign * 1j * np.pi / n) * sq)
    a = np.asarray(vec, dtype=np.complex128) * chirp
    kernel = np.conj(chirp)
    m = 1
    while m < 2 * n - 1:
        m *= 2
    fa = np.fft.fft(a, m)
    kpad = np.zeros(m, dtype=np.complex128)
    kpad[:n] = kernel
    kpad[m - n + 1 :] = kernel[1:][::-1]
    conv = np.fft.ifft(fa * np.fft.fft(kpad))
    return chirp * conv[:n]


def raw_transform(vec, sign: int) -> np.ndarray:
    """sum_x vec[x] e(sign * x r / n) for every r, any length n."""
    vec = np.asarray(vec, dtype=np.complex128)
    if len(vec) <= DIRECT_CUTOFF:
        return _transform_direct(vec, sign)
    return _transform_bluestein(vec, sign)


def dft(f: DensityFn) -> Spectrum:
    """Normalized transform of a group function; intervals are rejected.

    Callers embed interval functions into a cyclic group explicitly when they
    need spectra.
    """
    if f.domain.kind not in (CYCLIC, PRODUCT):
        raise DomainError("dft is defined on group domains; embed intervals first")
    return Spectrum(f.n, raw_transform(f.values, +1) / f.n)


def dft_values(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return raw_transform(values, +1) / len(values)


def idft(spec: Spectrum | np.ndarray) -> np.ndarray:
    """Inverse transform; returns the complex value vector."""
    coeffs = spec.coeffs if isinstance(spec, Spectrum) else np.asarray(spec)
    return raw_transform(coeffs, -1)


def idft_real(spec) -> np.ndarray:
    vals = idft(spec)
    if np.abs(vals.imag).max() > _IMAG_TOL:
        raise DomainError("inverse transform of a non-conjugate-symmetric spectrum")
    return vals.real


def convolve(fv, gv) -> np.ndarray:
    """Cyclic convolution E_y[f(y) g(x-y)] via the multiplication identity."""
    fv = np.asarray(fv, dtype=np.float64)
    gv = np.asarray(gv, dtype=np.float64)
    if fv.shape != gv.shape:
        raise DomainError(f"convolve needs equal sizes, got {len(fv)} and {len(gv)}")
    prod = dft_values(fv) * dft_values(gv)
    out = idft(prod)
    return out.real
