"""Three-step interval construction and the Bernoulli sampling that turns a
function into a genuine subset of [N].

Step 1 fixes a modulus: N' = p*q <= N with p prime, q admissible for the
product construction, and a zero tail of length N - N' long enough that
differences just under N'/2 are starved of progressions.  Step 2 tiles a
product-construction profile g on Z_q across [N'] (zero beyond), which
controls every difference not divisible by q up to a 1/q discretization
error.  Step 3 re-randomizes the residue classes where g sits at its common
value alpha*, placing an affine image of a scaled low-AP subset on each,
which attacks the differences divisible by q.

Verification is an exhaustive scan over every 0 < d < N/2 in the
over-(N-2d) normalization; the scan never appeals to the concentration
arguments that motivate the construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .behrend import low_ap_density_subset, scaled_indicator
from .domains import DensityFn, interval, is_prime
from .errors import DomainError, InfeasibleError, RetriesExhausted
from .product import ProductParams, construct_product


@dataclass
class IntervalParams:
    n_total: int  # N
    alpha: float
    epsilon: float
    mode: str
    p: int  # N'/q, prime
    q: int
    factors: tuple  # factors of q
    n_prime: int  # N' = p*q
    beta: float  # exact tail fraction 1 - N'/N
    alpha0: float = 0.1
    notes: list = field(default_factory=list)

    @property
    def alpha_prime(self) -> float:
        return self.alpha / (1 - self.beta)


def seam_tail_fraction(alpha: float, n_total: int) -> float:
    """Smallest tail fraction that starves every near-boundary difference:
    t/(beta N + t) <= alpha^3 for all t >= 1 needs beta N >= (1-alpha^3)/alpha^3."""
    return (1 - alpha**3) / (alpha**3 * n_total) * 1.05


def choose_interval_params(
    n_total: int,
    alpha: float,
    epsilon: float,
    mode: str = "desk",
    factors: tuple | None = None,
    alpha0: float = 0.1,
    beta_floor: float | None = None,
) -> IntervalParams:
    """Pick the tail fraction, the modulus q and the class count p = N'/q.

    Strict mode enforces the full hypothesis chain (N >= epsilon^-15,
    epsilon <= alpha^7, modulus window N^(1/5) < q < sqrt(beta alpha^3
    (1-eps) N) with beta = eps^2) and fails loudly naming the violated bound;
    the class-balance argument pins the window on the tiling modulus q, with
    the class count p = N'/q a free large prime.  Desk mode admits any
    modulus the product side accepts, prefers the largest N' = p*q, and
    records every waiver; pass ``beta_floor`` to demand a longer zero tail
    (see seam_tail_fraction for the value that defeats boundary differences).
    """
    if mode not in ("strict", "desk"):
        raise DomainError(f"unknown mode {mode!r}")
    notes = []
    if mode == "strict":
        if n_total < epsilon**-15:
            raise InfeasibleError(
                f"N={n_total} violates N >= epsilon^-15 = {epsilon**-15:.6g}"
            )
        if epsilon > alpha**7:
            raise InfeasibleError(f"epsilon={epsilon} violates epsilon <= alpha^7 = {alpha**7:.3g}")
        if alpha > alpha0:
            raise InfeasibleError(f"alpha={alpha} exceeds alpha0={alpha0}")
        beta_cap = epsilon**2
        q_lo = n_total**0.2
        q_hi = math.sqrt(beta_cap * alpha**3 * (1 - epsilon) * n_total)
        if q_hi <= q_lo:
            raise InfeasibleError(
                f"modulus window (N^0.2, sqrt(beta alpha^3 (1-eps) N)) = "
                f"({q_lo:.4g}, {q_hi:.4g}) is empty"
            )
    else:
        if n_total < 1000:
            raise InfeasibleError(f"N={n_total} below the desk minimum 1000")
        q_lo = 5
        q_hi = n_total**0.8
        beta_cap = max(epsilon**2, 0.25)
        notes.append("desk mode: modulus window widened to [5, N^0.8]")
        seam = seam_tail_fraction(alpha, n_total)
        if (beta_floor or 0.0) < seam:
            notes.append(
                f"tail fraction below the seam threshold {seam:.4g} leaves boundary "
                f"differences above alpha^3; pass beta_floor to harden the tail"
            )
    if beta_floor is not None:
        if beta_floor >= 0.5:
            raise InfeasibleError("tail floor beta >= 0.5 leaves no room for the profile")
        beta_cap = max(beta_cap, beta_floor * 1.5 + 0.01)

    eps_prod = 4 * epsilon
    candidates = _modulus_candidates(eps_prod, alpha, q_lo, q_hi, factors)
    if not candidates:
        raise InfeasibleError(
            f"no admissible modulus q in ({q_lo:.4g}, {q_hi:.4g}) for the product side"
        )
    best = None  # maximize N', tie-break on larger q
    for q, fac in candidates:
        lo_p = max(int(math.ceil((1 - beta_cap) * n_total / q)), 3)
        hi_p = n_total // q
        if beta_floor is not None:
            hi_p = min(hi_p, int(math.floor((1 - beta_floor) * n_total / q)))
        for p in range(hi_p, lo_p - 1, -1):
            if is_prime(p) and p != q:
                if best is None or (p * q, q) > (best[0] * best[1], best[1]):
                    best = (p, q, fac)
                break
    if best is None:
        raise InfeasibleError(
            f"no prime class count p puts N' = p*q inside the tail window for any "
            f"modulus q in ({q_lo:.4g}, {q_hi:.4g})"
        )
    p, q, fac = best
    n_prime = p * q
    return IntervalParams(
        n_total=n_total,
        alpha=alpha,
        epsilon=epsilon,
        mode=mode,
        p=p,
        q=q,
        factors=fac,
        n_prime=n_prime,
        beta=1 - n_prime / n_total,
        alpha0=alpha0,
        notes=notes + [f"modulus window ({q_lo:.4g}, {q_hi:.4g}), tail cap {beta_cap:.4g}"],
    )


def _modulus_candidates(eps_prod, alpha, q_lo, q_hi, factors):
    """Moduli q (with factorizations) admissible for the product side."""
    if factors is not None:
        fac = tuple(int(m) for m in factors)
        q = 1
        for m in fac:
            q *= m
        return [(q, fac)]
    # single-factor moduli: the base profile needs (3q-1)/(q-1)^3 >= eps_prod
    out = []
    q = max(5, int(q_lo) | 1)
    while q <= q_hi:
        if is_prime(q) and (3 * q - 1) / (q - 1) ** 3 >= eps_prod:
            out.append((q, (q,)))
        q += 2
    out.sort(key=lambda t: -t[0])  # prefer many classes
    return out


# ---------------------------------------------------------------------------
# step 2: tiling


def step1_step2_tile(params: IntervalParams, g: DensityFn) -> DensityFn:
    """Tile g over [N'] by residue mod q and zero the tail (N', N]."""
    if g.n != params.q:
        raise DomainError(f"profile lives on Z_{g.n}, expected Z_{params.q}")
    n, np_, q = params.n_total, params.n_prime, params.q
    x = np.arange(1, n + 1, dtype=np.int64)
    values = np.where(x <= np_, g.values[x % q], 0.0)
    f2 = DensityFn(interval(n), values)
    want = params.alpha
    got = f2.mean()
    # N' = p*q exactly, so the tiled mean is alpha' * N'/N = alpha exactly
    if abs(got - want) > 1e-9:
        raise DomainError(f"tiled mean {got} != alpha {want} beyond rounding")
    return f2


# ---------------------------------------------------------------------------
# step 3: overlay


@dataclass
class OverlayPlan:
    alpha_star: float
    t_classes: np.ndarray  # residues t with g(t) = alpha*
    a: np.ndarray  # per-residue dilation (0 outside T)
    b: np.ndarray
    n_classes: int  # p = |P_t|


def make_overlay_plan(
    params: IntervalParams, g: DensityFn, rng: np.random.Generator
) -> OverlayPlan:
    """Identify the common value alpha* and draw affine maps per class."""
    vals, counts = np.unique(np.round(g.values, 12), return_counts=True)
    alpha_star = float(vals[counts.argmax()])
    t_classes = np.flatnonzero(np.abs(g.values - alpha_star) <= 1e-9)
    q, p = params.q, params.p
    a = np.zeros(q, dtype=np.int64)
    b = np.zeros(q, dtype=np.int64)
    a[t_classes] = rng.integers(1, p, size=len(t_classes))
    b[t_classes] = rng.integers(0, p, size=len(t_classes))
    return OverlayPlan(alpha_star, t_classes, a, b, p)


def step3_overlay(
    f2: DensityFn, params: IntervalParams, plan: OverlayPlan, xi: DensityFn
) -> DensityFn:
    """Replace f2 on each class P_t (t in T) by xi(a_t phi_t(x) + b_t).

    phi_t enumerates P_t = {x <= N' : x = t mod q} in increasing order with
    phi_t(x_i) = i mod p, so each class mean is exactly E[xi] = alpha*.
    """
    n, np_, q, p = params.n_total, params.n_prime, params.q, plan.n_classes
    if xi.n != p:
        raise DomainError(f"overlay profile lives on Z_{xi.n}, expected Z_{p}")
    values = f2.values.copy()
    x = np.arange(1, n + 1, dtype=np.int64)
    for t in plan.t_classes:
        t = int(t)
        first = t if t >= 1 else q  # smallest x >= 1 with x = t (mod q)
        xs = np.arange(first, np_ + 1, q, dtype=np.int64)
        idx = np.arange(1, len(xs) + 1, dtype=np.int64) % p
        values[xs - 1] = xi.values[(plan.a[t] * idx + plan.b[t]) % p]
    return DensityFn(interval(n), values)


# ---------------------------------------------------------------------------
# full pipeline


@dataclass
class IntervalCert:
    seed: int
    mode: str
    n_total: int
    n_prime: int
    q: int
    p: int
    alpha: float
    epsilon: float
    alpha_star: float
    overlay_retries: int
    product_retries: int
    worst_d: int
    worst_density: float
    passed: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "mode": self.mode,
            "N": int(self.n_total),
            "N_prime": int(self.n_prime),
            "q": int(self.q),
            "p": int(self.p),
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "alpha_star": self.alpha_star,
            "overlay_retries": self.overlay_retries,
            "product_retries": self.product_retries,
            "worst_d": int(self.worst_d),
            "worst_density": float(self.worst_density),
            "passed": bool(self.passed),
            "notes": self.notes,
        }


def scan_interval_fn(
    values: np.ndarray, target: float, early_exit: bool = False
) -> tuple[int, float, bool]:
    """Exhaustive over-(N-2d) scan of every 0 < d < N/2.

    Returns (worst d, worst density, passed).  With early_exit the scan
    stops at the first violation (worst-so-far reported).
    """
    v = np.asarray(values, dtype=np.float64)
    n = len(v)
    worst_d, worst = 0, -1.0
    for d in range(1, (n - 1) // 2 + 1):
        w = n - 2 * d
        dens = float(np.dot(v[:w] * v[d : d + w], v[2 * d :])) / w
        if dens > worst:
            worst_d, worst = d, dens
            if early_exit and dens > target + 1e-12:
                return worst_d, worst, False
    return worst_d, worst, worst <= target + 1e-12


def construct_interval_fn(
    params: IntervalParams,
    seed: int,
    max_overlay_retries: int = 3,
    max_product_retries: int = 2,
    product_level_retries: int = 10,
) -> tuple[DensityFn, IntervalCert]:
    """Run the three steps, scan exhaustively, and retry on failure.

    Overlay randomness is retried first (cheap); the product seed rotates
    only after the overlay budget is spent.  Raises RetriesExhausted carrying
    the worst difference seen when every combination fails.
    """
    alpha, eps = params.alpha, params.epsilon
    target = alpha**3 * (1 - eps)
    prod_params = ProductParams(
        alpha=params.alpha_prime,
        epsilon=4 * eps,
        factors=params.factors,
        mode=params.mode,
    )
    best = None
    overlay_used = 0
    product_used = 0
    for p_try in range(max_product_retries):
        product_used = p_try + 1
        g_fn, g_cert = construct_product(
            prod_params, seed=seed + 7919 * p_try, max_retries_per_level=product_level_retries
        )
        f2 = step1_step2_tile(params, g_fn)
        x_set = low_ap_density_subset(params.p, min(_xi_alpha(params, g_fn), params.alpha0))
        for o_try in range(max_overlay_retries):
            overlay_used += 1
            rng = np.random.default_rng(np.random.SeedSequence([seed, 2, p_try, o_try]))
            plan = make_overlay_plan(params, g_fn, rng)
            xi = scaled_indicator(x_set, plan.alpha_star)
            f3 = step3_overlay(f2, params, plan, xi)
            if abs(f3.mean() - alpha) > 1e-9:
                raise DomainError(f"overlay broke the mean: {f3.mean()} vs {alpha}")
            worst_d, worst, ok = scan_interval_fn(f3.values, target, early_exit=True)
            if best is None or worst < best[2]:
                best = (f3, worst_d, worst, plan)
            if ok:
                worst_d, worst, ok = scan_interval_fn(f3.values, target)  # full pass for the cert
                cert = IntervalCert(
                    seed=seed,
                    mode=params.mode,
                    n_total=params.n_total,
                    n_prime=params.n_prime,
                    q=params.q,
                    p=params.p,
                    alpha=alpha,
                    epsilon=eps,
                    alpha_star=plan.alpha_star,
                    overlay_retries=overlay_used,
                    product_retries=product_used,
                    worst_d=worst_d,
                    worst_density=worst,
                    passed=ok,
                    notes=params.notes,
                )
                return f3, cert
    raise RetriesExhausted(
        f"interval construction failed all {overlay_used} overlay x {product_used} product "
        f"attempts; best attempt has density {best[2]:.6g} at d={best[1]} > target {target:.6g}",
        log={
            "worst_d": best[1],
            "worst_density": best[2],
            "target": target,
            "overlay_retries": overlay_used,
            "product_retries": product_used,
        },
    )


def _xi_alpha(params: IntervalParams, g_fn: DensityFn) -> float:
    vals, counts = np.unique(np.round(g_fn.values, 12), return_counts=True)
    return float(vals[counts.argmax()])


# ---------------------------------------------------------------------------
# set sampling


@dataclass
class SampleCert:
    seed: int
    attempts: int
    size: int
    size_required: float
    worst_d: int
    worst_density: float
    target: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "attempts": self.attempts,
            "size": self.size,
            "size_required": self.size_required,
            "worst_d": int(self.worst_d),
            "worst_density": float(self.worst_density),
            "target": self.target,
            "passed": bool(self.passed),
        }


def sample_set(
    f: DensityFn,
    epsilon: float,
    rng: np.random.Generator,
    max_attempts: int = 10,
    alpha: float | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, SampleCert]:
    """Truncate the top epsilon-fraction of [N] to zero, sample each x into A
    independently with probability f'(x), and check |A| >= alpha N together
    with every per-difference density against alpha^3 - epsilon.

    The function is expected to carry a boosted mean (alpha + 2 epsilon), so
    the default alpha is E[f] - 2 epsilon.  Resamples up to max_attempts and
    returns the last attempt with its certificate; raises RetriesExhausted
    when no attempt passes.
    """
    if f.domain.kind != "interval":
        raise DomainError("sampling needs an interval function")
    n = f.n
    if alpha is None:
        alpha = f.mean() - 2 * epsilon
    target = alpha**3 - epsilon
    cutoff = n * (1 - epsilon)
    x = np.arange(1, n + 1, dtype=np.int64)
    fprime = np.where(x >= cutoff, 0.0, f.values)
    last = None
    for attempt in range(1, max_attempts + 1):
        draws = rng.random(n)
        members = x[draws < fprime]
        indicator = np.zeros(n)
        indicator[members - 1] = 1.0
        size_ok = len(members) >= alpha * n
        worst_d, worst, ok = scan_interval_fn(indicator, target, early_exit=True)
        cert = SampleCert(
            seed=seed,
            attempts=attempt,
            size=len(members),
            size_required=alpha * n,
            worst_d=worst_d,
            worst_density=worst,
            target=target,
            passed=bool(size_ok and ok),
        )
        last = (members, cert)
        if cert.passed:
            return members, cert
    raise RetriesExhausted(
        f"sampling failed {max_attempts} attempts; last: |A|={last[1].size} "
        f"(need {last[1].size_required:.1f}), worst density {last[1].worst_density:.6g} "
        f"at d={last[1].worst_d} vs target {target:.6g}",
        log={"cert": last[1]},
    )
