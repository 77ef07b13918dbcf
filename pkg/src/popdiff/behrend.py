"""Progression-free sets in [N] and low-3-AP-density subsets of Z_n.

Three generators are combined:

* an exact branch-and-bound maximizer (the test oracle, N <= 40);
* a deterministic greedy sieve (strong at desk sizes);
* the digit/sphere construction: digit vectors in base 2b-1 with a fixed
  square-sum have no nontrivial 3-AP, and the densest square-sum class is
  located by polynomial convolution before anything is enumerated.

``low_ap_density_subset`` turns an AP-free set A of [N] into a dense subset
of Z_n with few 3-APs, by one of two routes: for n <= 4N the densest piece of
A inside a window of length ceil(n/2) embeds directly (no nontrivial 3-AP at
all); for n > 4N the doubled set S = {2a} indexes blocks of t = floor(n/4N)
consecutive residues whose union only contains 3-APs falling inside a single
block.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .domains import DensityFn, cyclic
from .errors import DomainError, InfeasibleError

BRUTE_CAP = 40
_SURROGATE_CAP = 4096


def is_apfree(elements) -> bool:
    """Pairwise midpoint check: no a < c in the set with (a+c)/2 also in it."""
    arr = sorted(int(v) for v in elements)
    eset = set(arr)
    for i, a in enumerate(arr):
        for c in arr[i + 1 :]:
            if (a + c) % 2 == 0 and (a + c) // 2 in eset:
                return False
    return True


@functools.lru_cache(maxsize=None)
def brute_max_apfree(n: int) -> tuple[int, tuple]:
    """Exact maximum 3-AP-free subset of [n] with one witness; n <= 40.

    Branch and bound over elements in increasing order, seeded with the
    greedy solution so the count bound prunes from the start.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if n > BRUTE_CAP:
        raise DomainError(f"exhaustive search capped at n <= {BRUTE_CAP}")
    best = [int(v) for v in _greedy_apfree(n)]
    chosen: list = []
    cset: set = set()

    def ok(z: int) -> bool:
        return not any((x + z) % 2 == 0 and (x + z) // 2 in cset for x in chosen)

    def rec(start: int) -> None:
        nonlocal best
        if len(chosen) > len(best):
            best = chosen.copy()
        cands = [z for z in range(start, n + 1) if ok(z)]
        for idx, z in enumerate(cands):
            if len(chosen) + (len(cands) - idx) <= len(best):
                return
            chosen.append(z)
            cset.add(z)
            rec(z + 1)
            chosen.pop()
            cset.discard(z)

    rec(1)
    return len(best), tuple(best)


def _greedy_apfree(n: int) -> np.ndarray:
    member = np.zeros(n + 1, dtype=bool)
    for z in range(1, n + 1):
        ys = np.flatnonzero(member[:z])
        if ys.size:
            xs = 2 * ys - z
            xs = xs[xs >= 1]
            if xs.size and member[xs].any():
                continue
        member[z] = True
    return np.flatnonzero(member)


def _digit_apfree(n: int) -> np.ndarray:
    """Best digit-construction set inside [n] over a (base, dimension) grid."""
    best = (0, None)
    b = 2
    while (2 * b - 1) ** 2 <= n:
        k = 2
        while (2 * b - 1) ** k <= n:
            # counts[r] = number of digit vectors in {0..b-1}^k with sum c_i^2 = r
            single = np.zeros((b - 1) ** 2 + 1)
            for c in range(b):
                single[c * c] += 1
            counts = single
            for _ in range(k - 1):
                counts = np.convolve(counts, single)
            r = int(counts.argmax())
            if counts[r] > best[0]:
                best = (int(counts[r]), (b, k, r))
            k += 1
        b += 1
    if best[1] is None:
        return np.array([], dtype=np.int64)
    b, k, r = best[1]
    base = 2 * b - 1
    out: list = []
    digits = [0] * k

    def rec(pos: int, rem: int, val: int) -> None:
        if pos == k:
            if rem == 0:
                out.append(val + 1)
            return
        tail = (k - pos - 1) * (b - 1) ** 2
        for c in range(b):
            cc = c * c
            if cc > rem or rem - cc > tail:
                continue
            rec(pos + 1, rem - cc, val + c * base**pos)

    rec(0, r, 0)
    return np.asarray(sorted(out), dtype=np.int64)


def apfree_set(n: int) -> np.ndarray:
    """A large 3-AP-free subset of [n]; exact for n <= 40, deterministic always."""
    if n < 1:
        raise DomainError("n must be positive")
    if n <= BRUTE_CAP:
        _, witness = brute_max_apfree(n)
        return np.asarray(witness, dtype=np.int64)
    greedy = _greedy_apfree(n)
    digit = _digit_apfree(n)
    return digit if len(digit) > len(greedy) else greedy


# ---------------------------------------------------------------------------
# low-AP subsets of Z_n


def count_cyclic_3aps(elements, n: int) -> int:
    """#{(x,d) in Z_n^2 : x, x+d, x+2d all in the set}, d = 0 included.

    Uses the bijection (x,d) <-> (x, z=x+2d) valid for odd n: count pairs
    (x,z) of set elements whose midpoint (x+z)/2 mod n is again an element.
    """
    if n % 2 == 0:
        raise DomainError("cyclic 3-AP counting needs odd n")
    el = np.asarray(sorted(int(v) % n for v in elements), dtype=np.int64)
    if el.size == 0:
        return 0
    member = np.zeros(n, dtype=bool)
    member[el] = True
    inv2 = pow(2, -1, n)
    total = 0
    chunk = max(1, (1 << 22) // max(el.size, 1))
    for lo in range(0, el.size, chunk):
        block = el[lo : lo + chunk]
        mids = ((block[:, None] + el[None, :]) * inv2) % n
        total += int(member[mids].sum())
    return total


@dataclass
class LowAPSubset:
    n: int
    elements: np.ndarray
    density: float
    ap_density: float
    bound: float
    source_interval: int
    block_width: int  # 0 for the windowed branch

    @property
    def ok(self) -> bool:
        return self.density > 0 and self.ap_density <= self.bound + 1e-12

    def to_dict(self) -> dict:
        return {
            "elements": [int(v) for v in self.elements],
            "n": int(self.n),
            "density": float(self.density),
            "ap_density": float(self.ap_density),
        }


def density_bound(alpha: float) -> float:
    return float(2.0 ** (-((np.log2(1 / alpha)) ** 2) / 9))


def _apfree_sizes_up_to(cap: int) -> np.ndarray:
    """sizes[N] = size of apfree_set's output for each N <= cap."""
    sizes = np.zeros(cap + 1, dtype=np.int64)
    for m in range(1, min(BRUTE_CAP, cap) + 1):
        sizes[m] = brute_max_apfree(m)[0]
    if cap > BRUTE_CAP:
        greedy = _greedy_apfree(cap)
        counts = np.zeros(cap + 1, dtype=np.int64)
        counts[greedy] = 1
        cum = np.cumsum(counts)
        sizes[BRUTE_CAP + 1 :] = cum[BRUTE_CAP + 1 :]
    return sizes


def low_ap_density_subset(n: int, alpha: float) -> LowAPSubset:
    """A subset of Z_n with density >= alpha and few 3-APs.

    The interval bound N is chosen constructively: the largest N for which
    the AP-free generator reaches density 6*alpha.  The certificate carries
    measured density and 3-AP density; the target bound is
    max(1/n, 2^(-(log2(1/alpha))^2 / 9)).
    """
    if n < 1:
        raise DomainError("n must be positive")
    if n % 2 == 0:
        raise DomainError("the modulus must be odd")
    if not 0 < alpha <= 0.1:
        raise DomainError(f"alpha={alpha} out of range (need 0 < alpha <= 0.1)")
    cap = min(max(64, 4 * n), _SURROGATE_CAP)
    sizes = _apfree_sizes_up_to(cap)
    target = 6 * alpha
    candidates = [m for m in range(1, cap + 1) if sizes[m] >= target * m]
    if not candidates:
        raise InfeasibleError(f"no interval bound reaches density {target}")
    bound = max(1.0 / n, density_bound(alpha))

    for n_a in sorted(candidates, reverse=True):
        a_set = apfree_set(n_a)
        if n <= 4 * n_a:
            elems = _windowed_subset(a_set, n)
        else:
            elems = _block_subset(a_set, n, n_a, alpha)
        if elems is not None and len(elems) >= alpha * n:
            ap = count_cyclic_3aps(elems, n) / n**2
            return LowAPSubset(
                n=n,
                elements=np.asarray(sorted(elems), dtype=np.int64),
                density=len(elems) / n,
                ap_density=ap,
                bound=bound,
                source_interval=n_a,
                block_width=0 if n <= 4 * n_a else max(1, n // (4 * n_a)),
            )
    raise InfeasibleError(f"no admissible interval bound yields density {alpha} in Z_{n}")


def _windowed_subset(a_set: np.ndarray, n: int):
    """Densest piece of the set inside a window of length ceil(n/2)."""
    if len(a_set) == 0:
        return None
    width = -(-n // 2)  # ceil
    best_piece = None
    for lo in range(1, int(a_set.max()) + 1, width):
        piece = a_set[(a_set >= lo) & (a_set < lo + width)]
        if best_piece is None or len(piece) > len(best_piece):
            best_piece = piece
    if best_piece is None or len(best_piece) == 0:
        return None
    return (best_piece - best_piece.min()) % n


def _block_subset(a_set: np.ndarray, n: int, n_a: int, alpha: float):
    """Union of blocks of width t = floor(n/4N) indexed by the doubled set."""
    t = n // (4 * n_a)
    if t < 1:
        return None
    need = int(np.ceil(6 * alpha * n_a))
    for size in range(min(need, len(a_set)), len(a_set) + 1):
        if size * t >= alpha * n:
            a_use = np.asarray(a_set[:size], dtype=np.int64)
            break
    else:
        a_use = np.asarray(a_set, dtype=np.int64)
        if len(a_use) * t < alpha * n:
            return None
    doubled = 2 * a_use
    _assert_no_approximate_ap(doubled)
    offs = np.arange(1, t + 1, dtype=np.int64)
    elems = ((doubled[:, None] - 1) * t + offs[None, :]).ravel()
    assert elems.max() <= n // 2, "block construction escaped the half-line"
    return elems % n


def _assert_no_approximate_ap(s: np.ndarray) -> None:
    # |2z - x - y| <= 1 must force x = y = z on the doubled set
    vals = np.asarray(s, dtype=np.int64)
    sums = vals[:, None] + vals[None, :]
    for z in vals:
        close = np.abs(2 * z - sums) <= 1
        xi, yi = np.nonzero(close)
        for i, j in zip(xi, yi):
            if not (vals[i] == vals[j] == z):
                raise AssertionError("doubled set admits an approximate 3-AP")


def scaled_indicator(x_set: LowAPSubset, alpha_star: float) -> DensityFn:
    """Indicator of the subset scaled to mean alpha_star."""
    n = x_set.n
    size = len(x_set.elements)
    if size == 0:
        raise DomainError("cannot scale an empty set")
    peak = alpha_star * n / size
    if peak > 1 + 1e-12:
        raise DomainError(
            f"scaling {peak:.6g} exceeds 1; the subset is too sparse for mean {alpha_star}"
        )
    values = np.zeros(n)
    values[x_set.elements] = min(peak, 1.0)
    return DensityFn(cyclic(n), values)
