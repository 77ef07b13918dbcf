"""The low-3-AP model function on prime cyclic groups, and smoothness
certificates for tuples of dilation coefficients.

The model function with mean alpha on Z_n is

    g(x) = alpha - (alpha/2) cos(2 pi x / n) - (alpha/2) cos(4 pi x / n),

a five-mode trigonometric profile whose spectrum is supported exactly on
{0, +-1, +-2}: ghat(0) = alpha and ghat(+-1) = ghat(+-2) = -alpha/4.  For any
odd prime n >= 7 the moments are rational in alpha:

    E[g]   = alpha
    E[g^2] = (5/4)  alpha^2
    E[g^3] = (53/32) alpha^3
    total 3-AP density Lambda(g) = (31/32) alpha^3

n = 7 is the cutoff because at n = 5 the frequencies +-1, +-2 exhaust the
whole group and extra wrapped triples change Lambda to (15/16) alpha^3.

A tuple (a_1..a_h) of nonzero dilations is *smooth* for a support set S when
no nonzero (r_1..r_h) in S^h satisfies sum r_j a_j = 0 (mod n).  Smoothness
forces E_x[prod_j g(a_j x + b_j)] = alpha^h for every shift tuple b.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .domains import DensityFn, Spectrum, cyclic, is_prime
from .errors import DomainError, SmoothSamplingError

SECOND_MOMENT_FACTOR = 5 / 4
CUBE_MOMENT_FACTOR = 53 / 32
TRIPLE_DENSITY_FACTOR = 31 / 32

MIN_MODEL_PRIME = 7


def model_support(n: int) -> tuple:
    return (0, 1, 2, (n - 2) % n, (n - 1) % n)


@dataclass
class ModelFn:
    alpha: float
    n: int
    fn: DensityFn
    spectrum: Spectrum

    @property
    def values(self) -> np.ndarray:
        return self.fn.values


def build_model_fn(alpha: float, n: int) -> ModelFn:
    """Construct the model function; spectrum stored from the closed form."""
    if not 0 < alpha <= 0.5:
        raise DomainError(
            f"alpha={alpha} out of range: the profile peaks at 2*alpha, so alpha <= 1/2"
        )
    if n % 2 == 0 or not is_prime(n):
        raise DomainError(f"model functions live on odd primes, got n={n}")
    if n < MIN_MODEL_PRIME:
        raise DomainError(
            f"n={n} too small: frequencies {{0,+-1,+-2}} must be distinct with "
            f"-2*(+-1) outside the support, which needs n >= {MIN_MODEL_PRIME}"
        )
    x = np.arange(n)
    values = alpha - (alpha / 2) * np.cos(2 * np.pi * x / n) - (alpha / 2) * np.cos(
        4 * np.pi * x / n
    )
    coeffs = np.zeros(n, dtype=np.complex128)
    coeffs[0] = alpha
    for r in (1, 2, n - 2, n - 1):
        coeffs[r] = -alpha / 4
    return ModelFn(alpha, n, DensityFn(cyclic(n), values), Spectrum(n, coeffs))


def model_fn_extra(m: ModelFn) -> dict:
    """Sidecar block for the function file format."""
    return {"model": {"alpha": float(m.alpha), "n": int(m.n)}}


# ---------------------------------------------------------------------------
# smoothness certificates


@dataclass
class SmoothnessCert:
    h: int
    a: tuple
    supp: tuple
    ok: bool
    witness: tuple | None = None


def smooth_tuple_ok(supp, a, n: int) -> SmoothnessCert:
    """Exhaustively certify a dilation tuple against a frequency support.

    Enumerates supp^h (fine for |supp| <= 5, h <= 3) and reports the first
    nonzero relation sum r_j a_j = 0 (mod n) as a witness if one exists.
    """
    a = tuple(int(v) % n for v in a)
    if any(v == 0 for v in a):
        raise DomainError("dilation coefficients must be nonzero")
    supp = tuple(int(r) % n for r in supp)
    h = len(a)
    if len(supp) ** h > 10**6:
        raise DomainError("support/tuple enumeration too large")
    for rvec in itertools.product(supp, repeat=h):
        if all(r == 0 for r in rvec):
            continue
        if sum(r * av for r, av in zip(rvec, a)) % n == 0:
            return SmoothnessCert(h, a, supp, False, witness=rvec)
    return SmoothnessCert(h, a, supp, True)


def sample_smooth_tuple(
    h: int, n: int, supp, rng: np.random.Generator, max_tries: int = 64
) -> tuple[tuple, SmoothnessCert]:
    """Rejection-sample a smooth tuple of h nonzero dilations."""
    if max_tries < 1:
        raise DomainError("max_tries must be at least 1")
    for _ in range(max_tries):
        a = tuple(int(v) for v in rng.integers(1, n, size=h))
        cert = smooth_tuple_ok(supp, a, n)
        if cert.ok:
            return a, cert
    raise SmoothSamplingError(
        f"no smooth {h}-tuple found in {max_tries} tries over Z_{n}; "
        f"n is too small for this support"
    )


# ---------------------------------------------------------------------------
# property verification


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    measured: float
    target: float
    tol: float


@dataclass
class ModelReport:
    alpha: float
    n: int
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def verify_model_properties(m: ModelFn) -> ModelReport:
    """Measure the defining moments of a model function and compare against
    the exact constants.

    The cube moment is checked against its exact value (53/32) alpha^3; that
    the profile sits above (3/2) alpha^3 is a fact of the construction, not a
    defect.
    """
    a, v, n = m.alpha, m.values, m.n
    rep = ModelReport(a, n)

    vmin, vmax = float(v.min()), float(v.max())
    mean = float(v.mean())
    rep.checks.append(
        PropertyCheck("range", -1e-12 <= vmin and vmax <= 2 * a + 1e-12, vmax, 2 * a, 1e-12)
    )
    rep.checks.append(PropertyCheck("mean", abs(mean - a) <= 1e-9, mean, a, 1e-9))

    from .aps import total_3ap_density

    lam = total_3ap_density(m.fn)
    rep.checks.append(
        PropertyCheck(
            "triple-density",
            abs(lam - TRIPLE_DENSITY_FACTOR * a**3) <= 1e-9,
            lam,
            TRIPLE_DENSITY_FACTOR * a**3,
            1e-9,
        )
    )

    cube = float((v**3).mean())
    rep.checks.append(
        PropertyCheck(
            "cube-moment",
            abs(cube - CUBE_MOMENT_FACTOR * a**3) <= 1e-9,
            cube,
            CUBE_MOMENT_FACTOR * a**3,
            1e-9,
        )
    )

    s = float(v.sum())
    sq = float((v**2).sum())
    pairwise = (s * s - sq) / (n * (n - 1))
    rep.checks.append(
        PropertyCheck("pairwise", pairwise <= a * a + 1e-12, pairwise, a * a, 1e-12)
    )

    second = float((v**2).mean())
    rep.checks.append(
        PropertyCheck(
            "second-moment",
            abs(second - SECOND_MOMENT_FACTOR * a * a) <= 1e-9,
            second,
            SECOND_MOMENT_FACTOR * a * a,
            1e-9,
        )
    )
    return rep
