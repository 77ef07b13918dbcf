"""Finite domains and [0,1]-valued functions on them.

Three domain kinds are supported:

* ``cyclic``   -- Z_n with n odd, elements 0..n-1;
* ``product``  -- a product of distinct odd primes m_1..m_s, identified with
  Z_n (n = prod m_i) through the Chinese remainder map and stored in the
  canonical Z_n labelling;
* ``interval`` -- the integers 1..N; index i of the value vector holds the
  value at x = i+1.

Functions are plain float vectors with every entry in [0,1].  Spectra are
complex vectors indexed by frequencies r in Z_n under the convention

    fhat(r) = (1/n) * sum_x f(x) * exp(2*pi*i*x*r/n).

File formats (used by the CLI and by every construction artifact):

* function file (JSON): ``{"domain": {"kind", "n", "factors"?}, "values": [...]}``
  plus optional extra keys (``model``, ``meta``) that loaders pass through;
* profile CSV: header ``d,density``, one row per difference, densities with
  12 significant digits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, FileFormatError

CYCLIC = "cyclic"
PRODUCT = "product"
INTERVAL = "interval"

GROUP = "group"
OVER_N = "interval-over-N"
OVER_WINDOW = "interval-over-N-2d"

NORMALIZATIONS = (GROUP, OVER_N, OVER_WINDOW)

# |coeff| > SUPPORT_EPS * n counts as a nonzero spectral coefficient; this
# separates exact zeros of sparse spectra from transform roundoff, whose
# magnitude grows with n.
SUPPORT_EPS = 1e-10

_VALUE_SLACK = 1e-9


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    f = 3
    while f * f <= m:
        if m % f == 0:
            return False
        f += 2
    return True


def primes_in(lo: int, hi: int) -> list:
    """Primes p with lo <= p <= hi (inclusive), by trial division."""
    return [p for p in range(max(2, lo), hi + 1) if is_prime(p)]


@dataclass(frozen=True)
class DomainDesc:
    kind: str
    n: int
    factors: tuple = ()

    def __post_init__(self):
        if self.kind not in (CYCLIC, PRODUCT, INTERVAL):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("domain size must be positive")
        if self.kind in (CYCLIC, PRODUCT) and self.n % 2 == 0:
            raise DomainError(f"group domains must have odd order, got n={self.n}")
        if self.kind == PRODUCT:
            fac = tuple(int(m) for m in self.factors)
            if not fac:
                raise DomainError("product domain needs factors")
            if len(set(fac)) != len(fac):
                raise DomainError(f"product factors must be distinct, got {fac}")
            for m in fac:
                if not is_prime(m):
                    raise DomainError(f"product factor {m} is not prime")
            prod = 1
            for m in fac:
                prod *= m
            if prod != self.n:
                raise DomainError(f"factors {fac} multiply to {prod}, not n={self.n}")
            object.__setattr__(self, "factors", fac)
        elif self.factors:
            raise DomainError("factors are only meaningful for product domains")

    @property
    def is_group(self) -> bool:
        return self.kind in (CYCLIC, PRODUCT)


def cyclic(n: int) -> DomainDesc:
    return DomainDesc(CYCLIC, n)


def product(factors) -> DomainDesc:
    fac = tuple(int(m) for m in factors)
    n = 1
    for m in fac:
        n *= m
    return DomainDesc(PRODUCT, n, fac)


def interval(n: int) -> DomainDesc:
    return DomainDesc(INTERVAL, n)


@dataclass
class DensityFn:
    """A function domain -> [0,1], stored as one value per element."""

    domain: DomainDesc
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) != self.domain.n:
            raise DomainError(
                f"value vector has length {v.shape}, domain has size {self.domain.n}"
            )
        if not np.isfinite(v).all():
            raise DomainError("values must be finite")
        if v.min() < -_VALUE_SLACK or v.max() > 1 + _VALUE_SLACK:
            raise DomainError(
                f"values outside [0,1]: min={v.min()}, max={v.max()}"
            )
        self.values = np.clip(v, 0.0, 1.0)

    @property
    def n(self) -> int:
        return self.domain.n

    def mean(self) -> float:
        return float(self.values.mean())


def density_fn(domain: DomainDesc, values) -> DensityFn:
    return DensityFn(domain, values)


@dataclass
class Spectrum:
    """Fourier coefficients of a function on Z_n, indexed by r in Z_n."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or len(c) != self.n:
            raise DomainError("coefficient vector length must equal n")
        self.coeffs = c

    @property
    def support(self) -> np.ndarray:
        """Frequencies whose coefficient clears the zero threshold."""
        return np.flatnonzero(np.abs(self.coeffs) > SUPPORT_EPS * self.n)


@dataclass
class APProfile:
    """Per-common-difference 3-AP densities, one entry per admissible d."""

    densities: np.ndarray
    normalization: str
    n: int

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise DomainError(f"unknown normalization {self.normalization!r}")
        self.densities = np.asarray(self.densities, dtype=np.float64)

    def to_csv(self, path) -> None:
        lines = ["d,density"]
        for d, val in enumerate(self.densities):
            lines.append(f"{d},{val:.12g}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# function file format


def fn_to_dict(f: DensityFn, extra: dict | None = None) -> dict:
    dom = {"kind": f.domain.kind, "n": int(f.domain.n)}
    if f.domain.kind == PRODUCT:
        dom["factors"] = [int(m) for m in f.domain.factors]
    out = {"domain": dom, "values": [float(v) for v in f.values]}
    if extra:
        out.update(extra)
    return out


def fn_from_dict(obj: dict) -> tuple[DensityFn, dict]:
    try:
        dom = obj["domain"]
        kind = dom["kind"]
        n = int(dom["n"])
        factors = tuple(dom.get("factors") or ())
        values = obj["values"]
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"not a function file: missing {exc}") from exc
    desc = DomainDesc(kind, n, factors if kind == PRODUCT else ())
    try:
        f = DensityFn(desc, np.asarray(values, dtype=np.float64))
    except (ValueError, TypeError) as exc:
        raise FileFormatError(str(exc)) from exc
    extras = {k: v for k, v in obj.items() if k not in ("domain", "values")}
    return f, extras


def save_fn(f: DensityFn, path, extra: dict | None = None) -> None:
    Path(path).write_text(
        json.dumps(fn_to_dict(f, extra), sort_keys=True) + "\n", encoding="utf-8"
    )


def load_fn(path) -> tuple[DensityFn, dict]:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot read function file {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise FileFormatError("function file must hold a JSON object")
    return fn_from_dict(obj)
