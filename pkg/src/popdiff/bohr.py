"""Bohr sets on odd cyclic groups, smoothing measures, the numerical
inequality suite, and the constructive popular-difference search.

B(S, rho) = {x : ||x r / n||_{R/Z} <= rho for every r in S}.  Distances are
kept as integers D[x] = max_r min(x r mod n, n - x r mod n), so membership,
dilation, doubling and regularity are exact set computations; regularity as a
function of the radius only changes at the finitely many radii D[x]/n, which
is what the scale searches enumerate.

The increment search follows the mean-cube strategy: grow frequency sets
S_i (large coefficients of f plus halved frequencies), smooth f by the Bohr
measure phi_i, track a_i = E[f_phi_i^3] until 2a_i - a_{i+1} >= alpha^3 -
eps/2, then return the difference in supp(phi) \\ {0} with the largest
per-difference density.  The returned d is an argmax, checkable against an
exhaustive scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aps import per_diff_density
from .domains import DensityFn
from .errors import DegenerateBohrError, DomainError, RegularityError
from .fourier import convolve, dft, dft_values

_EL_EPS = 1e-9  # membership threshold slack, in dist units


@dataclass
class BohrSet:
    n: int
    freqs: tuple
    rho: float
    dist: np.ndarray  # integer distances, one per group element
    elements: np.ndarray

    @property
    def codim(self) -> int:
        return len(self.freqs)

    @property
    def size(self) -> int:
        return len(self.elements)


def _dist_table(n: int, freqs) -> np.ndarray:
    x = np.arange(n, dtype=np.int64)
    if not freqs:
        return np.zeros(n, dtype=np.int64)
    d = np.zeros(n, dtype=np.int64)
    for r in freqs:
        m = (x * (int(r) % n)) % n
        np.maximum(d, np.minimum(m, n - m), out=d)
    return d


def _from_dist(n, freqs, rho, dist) -> BohrSet:
    elements = np.flatnonzero(dist <= rho * n + _EL_EPS)
    return BohrSet(n, tuple(freqs), float(rho), dist, elements)


def bohr_set(n: int, freqs, rho: float) -> BohrSet:
    """Materialize B(S, rho) by exact enumeration, O(n |S|)."""
    if n % 2 == 0:
        raise DomainError(f"Bohr sets need odd group order, got n={n}")
    if not 0 <= rho <= 1:
        raise DomainError(f"radius rho={rho} outside [0,1]")
    freqs = tuple(sorted(set(int(r) % n for r in freqs)))
    return _from_dist(n, freqs, rho, _dist_table(n, freqs))


def dilate(b: BohrSet, nu: float) -> BohrSet:
    """(B)_nu: same frequency set, radius scaled by nu."""
    if nu < 0 or nu * b.rho > 1 + 1e-12:
        raise DomainError(f"scaled radius {nu * b.rho} outside [0,1]")
    return _from_dist(b.n, b.freqs, nu * b.rho, b.dist)


def double(b: BohrSet) -> BohrSet:
    """2*B = {2x : x in B}, a Bohr set on the halved frequencies."""
    n = b.n
    inv2 = pow(2, -1, n)
    freqs = tuple(sorted((r * inv2) % n for r in b.freqs))
    x = np.arange(n, dtype=np.int64)
    dist = b.dist[(x * inv2) % n]
    return _from_dist(n, freqs, b.rho, dist)


# ---------------------------------------------------------------------------
# regularity


def is_regular(b: BohrSet) -> bool:
    """|(B)_{1+delta} \\ (B)_{1-delta}| <= 160 delta d |B| for all delta <= 1/(80d).

    Both sides only change at distances realized by group elements, so the
    check evaluates the inequality exactly at every realized breakpoint.
    """
    d = b.codim
    if d < 1:
        raise DomainError("regularity needs codimension >= 1")
    delta_max = 1 / (80 * d)
    r = b.rho * b.n
    if r <= _EL_EPS:
        return True  # radius 0: both scaled sets coincide for all small delta
    distinct = np.unique(b.dist)
    cand = [delta_max]
    up = distinct / r - 1
    cand.extend(up[(up > 0) & (up <= delta_max)])
    down = 1 - distinct / r
    down = down[(down > 0) & (down < delta_max)]
    cand.extend(down + 1e-12)  # just past the exit breakpoint
    cand = np.asarray(cand)
    sorted_dist = np.sort(b.dist)
    hi = np.searchsorted(sorted_dist, (1 + cand) * r + _EL_EPS, side="right")
    lo = np.searchsorted(sorted_dist, (1 - cand) * r + _EL_EPS, side="right")
    lhs = hi - lo
    rhs = 160 * cand * d * b.size
    return bool(np.all(lhs <= rhs + 1e-9))


def find_regular_scale(b: BohrSet, lo: float = 0.5, hi: float = 1.0) -> tuple[float, BohrSet]:
    """Largest nu in [lo, hi] with (B)_nu regular.

    Candidates are the element-induced radii in the window plus the window
    ends and gap midpoints; each candidate is checked exactly.
    """
    r = b.rho
    if r == 0:
        return hi, dilate(b, hi)
    breaks = np.unique(b.dist) / b.n
    breaks = breaks[(breaks >= lo * r - 1e-15) & (breaks <= hi * r + 1e-15)]
    cand = set([lo * r, hi * r])
    cand.update(breaks.tolist())
    ordered = sorted(cand)
    for a, bb in zip(ordered, ordered[1:]):
        cand.add((a + bb) / 2)
    for radius in sorted(cand, reverse=True):
        scaled = _from_dist(b.n, b.freqs, radius, b.dist)
        if is_regular(scaled):
            return radius / r, scaled
    raise RegularityError(
        f"no regular scale in [{lo}, {hi}] for B(S={b.freqs}, rho={b.rho}) on Z_{b.n}"
    )


# ---------------------------------------------------------------------------
# measures and smoothing


def beta_measure(b: BohrSet) -> np.ndarray:
    """Normalized indicator of B: n/|B| on B, zero elsewhere; mean exactly 1."""
    out = np.zeros(b.n)
    out[b.elements] = b.n / b.size
    return out


def phi_measure(b: BohrSet) -> np.ndarray:
    """The smoothed measure beta * beta; mean 1, support B+B."""
    beta = beta_measure(b)
    phi = convolve(beta, beta)
    return np.maximum(phi, 0.0)


def smooth(fvals: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    """f_kappa = f * kappa for a mean-1 measure kappa; preserves the mean."""
    out = convolve(np.asarray(fvals, dtype=np.float64), kappa)
    return np.clip(out, 0.0, None)


def lambda_weighted(fvals: np.ndarray, phi: np.ndarray) -> float:
    """E_{x,d}[f(x) f(x+d) f(x+2d) phi(d)] by direct sum over supp(phi)."""
    f = np.asarray(fvals, dtype=np.float64)
    n = len(f)
    if len(phi) != n:
        raise DomainError("weight and function sizes differ")
    total = 0.0
    for d in np.flatnonzero(np.abs(phi) > 1e-15):
        total += phi[d] * float(np.mean(f * np.roll(f, -int(d)) * np.roll(f, -2 * int(d))))
    return total / n


def lambda_weighted_spectral(fvals: np.ndarray, phi: np.ndarray) -> float:
    """Spectral evaluation of the weighted count (test oracle):
    sum over r1+r2+r3=0 of fhat(r1) fhat(r2) fhat(r3) phihat(-r2-2r3)."""
    n = len(fvals)
    fh = dft_values(fvals)
    ph = dft_values(phi)
    r2 = np.arange(n, dtype=np.int64)
    total = 0j
    for r3 in range(n):
        r1 = (-(r2 + r3)) % n
        total += np.sum(fh[r1] * fh[r2] * fh[r3] * ph[(-(r2 + 2 * r3)) % n])
    return float(total.real)


def sumset(elements: np.ndarray, n: int) -> np.ndarray:
    a = np.asarray(elements, dtype=np.int64)
    return np.unique((a[:, None] + a[None, :]) % n)


# ---------------------------------------------------------------------------
# scalar lemmas


def schur_gap(a: float, b: float, c: float) -> float:
    """a^3+b^3+c^3+3abc - (a^2 b + ab^2 + a^2 c + ac^2 + b^2 c + bc^2) >= 0."""
    if a < 0 or b < 0 or c < 0:
        raise DomainError("Schur gap needs nonnegative inputs")
    lhs = a**3 + b**3 + c**3 + 3 * a * b * c
    rhs = a * a * b + b * b * a + a * a * c + c * c * a + b * b * c + c * c * b
    return lhs - rhs


def pick_increment_index(a_seq, alpha: float, epsilon: float) -> int:
    """Least 1-based i with 2 a_i - a_{i+1} >= alpha^3 - eps/2.

    Guaranteed to exist within 2 log2(2/eps) terms when alpha^3 <= a_i <= 1;
    a miss past that horizon signals an upstream bug.
    """
    seq = [float(v) for v in a_seq]
    for v in seq:
        if not alpha**3 - 1e-9 <= v <= 1 + 1e-9:
            raise DomainError(f"sequence value {v} outside [alpha^3, 1]")
    horizon = math.ceil(2 * math.log2(2 / epsilon))
    for i in range(1, len(seq)):
        if 2 * seq[i - 1] - seq[i] >= alpha**3 - epsilon / 2:
            return i
    if len(seq) <= horizon:
        raise DomainError(
            f"no increment index in a length-{len(seq)} prefix; horizon is {horizon}"
        )
    raise DomainError("no increment index within the guaranteed horizon (upstream bug)")


# ---------------------------------------------------------------------------
# inequality suite


@dataclass
class LemmaCheck:
    name: str
    applicable: bool
    margin: float | None
    lhs: float | None
    rhs: float | None
    note: str = ""


@dataclass
class SuiteReport:
    checks: list = field(default_factory=list)

    def failures(self, tol: float = 1e-7) -> list:
        return [c for c in self.checks if c.applicable and c.margin is not None and c.margin < -tol]

    @property
    def ok(self) -> bool:
        return not self.failures()


def inequality_suite(f: DensityFn, b1: BohrSet, b2: BohrSet, nu: float) -> SuiteReport:
    """Numerically evaluate every smoothing inequality whose hypotheses hold.

    Hypothesis failures are reported as non-applicable entries, never raised;
    a negative margin beyond 1e-7 on an applicable entry is an implementation
    bug, since each inequality is a theorem.
    """
    n = f.n
    if b1.n != n or b2.n != n:
        raise DomainError("function and Bohr sets must share a group")
    rep = SuiteReport()
    fv = f.values
    d1 = b1.codim

    def contained(inner: BohrSet, outer: BohrSet, scale: float) -> bool:
        if scale * outer.rho >= 1:
            return True  # the dilated set is the whole group
        members = set(dilate(outer, scale).elements.tolist())
        return set(inner.elements.tolist()) <= members

    reg1 = is_regular(b1)
    reg2 = is_regular(b2)
    within_half = contained(b2, b1, nu / 2)
    within_nu = contained(b2, b1, nu)
    in_b1 = contained(b2, b1, nu * nu / 8)
    in_2b1 = contained(b2, double(b1), nu * nu / 8)

    beta1 = beta_measure(b1)
    phi1 = phi_measure(b1)
    phi2 = phi_measure(b2)
    f_phi1 = smooth(fv, phi1)
    f_phi2 = smooth(fv, phi2)

    # continuity of regular Bohr sets under convolution by tau = phi_2
    supp_tau = np.flatnonzero(phi2 > 1e-12)
    tau_inside = within_half  # supp(phi2) <= B2+B2 <= (B1)_nu when B2 <= (B1)_{nu/2}
    cont_ok = reg1 and nu <= 1 / (80 * d1) and tau_inside
    note = f"reg1={reg1}, nu<=1/(80 d1)={nu <= 1 / (80 * d1)}, supp tau in (B1)_nu={tau_inside}"
    if cont_ok:
        bound = 160 * nu * d1
        for name, kappa in (("continuity-beta", beta1), ("continuity-phi", phi1)):
            lhs = float(np.mean(np.abs(convolve(kappa, phi2) - kappa)))
            rep.checks.append(LemmaCheck(name, True, bound - lhs, lhs, bound, note))
        for name, kappa in (("continuity-f-beta", beta1), ("continuity-f-phi", phi1)):
            lhs = float(np.mean(np.abs(convolve(smooth(fv, phi2), kappa) - smooth(fv, kappa))))
            rep.checks.append(LemmaCheck(name, True, bound - lhs, lhs, bound, note))
    else:
        rep.checks.append(LemmaCheck("continuity", False, None, None, None, note))

    # moment comparison after smoothing by a finer Bohr measure
    jensen_ok = reg1 and reg2 and nu <= 1 / (80 * d1)
    if jensen_ok and within_half:
        for k in (2, 3):
            lhs = float(np.mean(f_phi2**k))
            rhs = float(np.mean(f_phi1**k)) - 160 * nu * d1 * k
            rep.checks.append(LemmaCheck(f"moment-phi-k{k}", True, lhs - rhs, lhs, rhs))
    if jensen_ok and within_nu:
        beta2 = beta_measure(b2)
        f_beta2 = smooth(fv, beta2)
        for k in (2, 3):
            lhs = float(np.mean(f_beta2**k))
            rhs = float(np.mean(f_phi1**k)) - 160 * nu * d1 * k
            rep.checks.append(LemmaCheck(f"moment-beta-k{k}", True, lhs - rhs, lhs, rhs))
    if not jensen_ok:
        rep.checks.append(
            LemmaCheck("moment-comparison", False, None, None, None, f"reg1={reg1}, reg2={reg2}")
        )

    # counting lemma: no hypotheses beyond shared group
    fh = dft_values(fv)
    fh2 = dft_values(f_phi2)
    sup = float(np.abs(fh - fh2).max())
    lam_f = lambda_weighted(fv, phi1)
    lam_s = lambda_weighted(f_phi2, phi1)
    rhs = lam_f - 3 * sup * float(np.mean(fv**2)) * math.sqrt(n / b1.size)
    rep.checks.append(LemmaCheck("counting", True, lam_s - rhs, lam_s, rhs))

    # Schur's inequality on smoothed value triples
    gaps = []
    for d in (1, 2, n // 3):
        a = f_phi1
        b = np.roll(f_phi1, -d)
        c = np.roll(f_phi1, -2 * d)
        lhs = a**3 + b**3 + c**3 + 3 * a * b * c
        rhs_v = a * a * b + a * b * b + a * a * c + a * c * c + b * b * c + b * c * c
        gaps.append(float((lhs - rhs_v).min()))
    rep.checks.append(LemmaCheck("schur", True, min(gaps), min(gaps), 0.0))

    # mean-cube increment
    mc_ok = reg1 and reg2 and nu <= 1 / (1000 * d1) and in_b1 and in_2b1
    note = (
        f"reg1={reg1}, reg2={reg2}, nu<=1/(1000 d1)={nu <= 1 / (1000 * d1)}, "
        f"B2 in (B1)_nu2/8={in_b1}, B2 in (2B1)_nu2/8={in_2b1}"
    )
    if mc_ok:
        _, b_mid = find_regular_scale(dilate(b1, nu / 2))
        phi = phi_measure(b_mid)
        lhs = lambda_weighted(f_phi2, phi)
        rhs = 2 * float(np.mean(f_phi1**3)) - float(np.mean(f_phi2**3)) - 1920 * nu * d1
        rep.checks.append(LemmaCheck("mean-cube-increment", True, lhs - rhs, lhs, rhs, note))
    else:
        rep.checks.append(LemmaCheck("mean-cube-increment", False, None, None, None, note))
    return rep


# ---------------------------------------------------------------------------
# the popular-difference search


def strict_schedule(epsilon: float):
    """rho_1 = eps^10, rho_i = exp(-rho_{i-1}^-5); underflows to 0 harmlessly."""

    def rho(i: int) -> float:
        r = epsilon**10
        for _ in range(i - 1):
            try:
                r = math.exp(-min(r**-5, 1e308)) if r > 0 else 0.0
            except OverflowError:
                r = 0.0
        return r

    return rho


def geometric_schedule(rho0: float, factor: float = 0.5):
    def rho(i: int) -> float:
        return rho0 * factor ** (i - 1)

    return rho


@dataclass
class IncrementTrace:
    levels: list
    chosen_i: int
    lambda_phi: float
    d: int
    density: float
    interval_mode: bool = False
    small_d_bound: float | None = None
    phi_support: np.ndarray | None = None  # in-memory only; lets oracles replay the argmax

    def to_dict(self) -> dict:
        out = {
            "levels": self.levels,
            "chosen_i": int(self.chosen_i),
            "lambda_phi": float(self.lambda_phi),
            "d": int(self.d),
            "density": float(self.density),
        }
        if self.interval_mode:
            out["interval_mode"] = True
            out["small_d_bound"] = self.small_d_bound
        return out


def upper_search(
    f: DensityFn,
    epsilon: float,
    schedule=None,
    interval_mode: bool = False,
    nu: float | None = None,
) -> IncrementTrace:
    """Find a popular difference by the mean-cube increment iteration.

    ``schedule`` maps a 1-based level to rho_i (default: the strict recipe).
    ``nu`` overrides the final dilation factor (default 1e-5 eps rho_i^2, the
    strict choice, which collapses nontrivial Bohr sets at desk sizes).  In
    interval mode the frequency 1 joins every frequency set, which pins the
    returned difference to a short integer; the trace records the bound.
    """
    if not f.domain.is_group:
        raise DomainError("the search runs on odd cyclic groups")
    n = f.n
    fv = f.values
    alpha = f.mean()
    if schedule is None:
        schedule = strict_schedule(epsilon)
    spec = dft(f)
    amag = np.abs(spec.coeffs)
    rho1 = schedule(1)
    big = set(int(r) for r in np.flatnonzero(amag >= rho1 / 2))

    horizon = math.ceil(2 * math.log2(2 / epsilon)) + 1
    inv2 = pow(2, -1, n)
    levels = []
    a_seq: list = []
    bohrs: list = []
    s_prev: set = set()
    chosen = None
    for i in range(1, horizon + 1):
        rho_i = schedule(i)
        s_i = set(big) | {(r * inv2) % n for r in s_prev}
        if interval_mode:
            s_i.add(1)
        b_nom = bohr_set(n, s_i, min(rho_i / (4 * math.pi), 1.0))
        _, b_i = find_regular_scale(b_nom)
        phi_i = phi_measure(b_i)
        a_i = float(np.mean(smooth(fv, phi_i) ** 3))
        a_seq.append(a_i)
        bohrs.append((rho_i, b_i))
        levels.append(
            {"rho": rho_i, "S_size": len(s_i), "B_size": int(b_i.size), "mean_cube": a_i}
        )
        s_prev = s_i
        if i >= 2 and 2 * a_seq[i - 2] - a_seq[i - 1] >= alpha**3 - epsilon / 2:
            chosen = i - 1
            break
    if chosen is None:
        raise DomainError("increment index not found within the guaranteed horizon")

    rho_c, b_c = bohrs[chosen - 1]
    if nu is None:
        nu = 1e-5 * epsilon * rho_c**2
    _, b_final = find_regular_scale(dilate(b_c, min(nu / 2, 1.0)))
    if b_final.size <= 1:
        raise DegenerateBohrError(
            f"Bohr set collapsed to the origin at level {chosen}", level=chosen
        )
    phi = phi_measure(b_final)
    lam = lambda_weighted(fv, phi)

    candidates = sumset(b_final.elements, n)
    best_d, best_val = None, -1.0
    for d in candidates:
        d = int(d)
        if d == 0:
            continue
        val = per_diff_density(f, d)
        if val > best_val + 1e-15:
            best_d, best_val = d, val
    if best_d is None:
        raise DegenerateBohrError("no nonzero difference in supp(phi)", level=chosen)

    d_out = best_d
    bound = None
    if interval_mode:
        d_out = min(best_d, n - best_d)
        bound = 2 * rho1 * n
    return IncrementTrace(
        levels=levels,
        chosen_i=chosen,
        lambda_phi=lam,
        d=d_out,
        density=best_val,
        interval_mode=interval_mode,
        small_d_bound=bound,
        phi_support=candidates,
    )
