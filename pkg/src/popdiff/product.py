"""Randomized level-by-level lower-bound construction on products of distinct
primes, with an exact per-difference verifier.

Level 1 on Z_{m_1} is the boost profile: value 0 at the origin and
alpha' = alpha(1 + 1/(m_1-1)) elsewhere.  Each later level i lifts f_{i-1}
from Q_{i-1} = Z_{m_1...m_{i-1}} to Q_i and overwrites the Z_{m_i}-fiber over
every coset in a chosen set M_{i-1} of alpha'-valued points with a randomly
reparametrized model profile g_{alpha'}(a_w y + b_w).

Verification never appeals to the probabilistic argument.  The verifier
computes the density of 3-APs for EVERY nonzero difference d of Q_i exactly,
using the product structure:

* differences with d_{[i-1]} = 0 reduce to per-difference densities of the
  model profile along modified fibers (a 19-term trigonometric closed form
  evaluated on all of Z_{m_i});
* differences with d' = d_{[i-1]} != 0 factor through the coset triple
  (w, w+d', w+2d').  When every dilation triple involved is smooth for the
  model support, the fiber average equals the level-(i-1) product exactly,
  for every lift of d'; the finitely many non-smooth triples contribute
  explicit trigonometric ripples in d_i which are evaluated on all of Z_{m_i}.

The assembled table is exact to roundoff and is cross-checked against brute
force on small groups in the test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .aps import perdiff_table_dense, perdiff_table_sparse
from .domains import DensityFn, cyclic, is_prime, product
from .errors import DomainError, InfeasibleError, RetriesExhausted
from .modelfn import build_model_fn, model_support

STRICT_EPS_MAX = 20.0**-9

_ALPHA_PRIME_TOL = 1e-12


def mu_schedule(alpha: float, epsilon: float, s: int, m1: int) -> tuple:
    """mu_1 = eps^(1/4), mu_i = 150^(i-1) * alpha'^-6 * eps^(1/4)."""
    ap = alpha * (1 + 1 / (m1 - 1))
    out = [epsilon**0.25]
    for i in range(2, s + 1):
        out.append(150.0 ** (i - 1) * ap**-6 * epsilon**0.25)
    return tuple(out)


@dataclass
class ProductParams:
    alpha: float
    epsilon: float
    factors: tuple
    mode: str = "desk"  # "strict" | "desk"
    mu: tuple | None = None  # override; default from mu_schedule
    tower_c: float | None = None  # informational constant for the feasibility report

    def __post_init__(self):
        self.factors = tuple(int(m) for m in self.factors)
        if self.mode not in ("strict", "desk"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.mu is None:
            self.mu = mu_schedule(self.alpha, self.epsilon, len(self.factors), self.factors[0])

    @property
    def alpha_prime(self) -> float:
        return self.alpha * (1 + 1 / (self.factors[0] - 1))


@dataclass
class FeasibilityCheck:
    name: str
    status: str  # "pass" | "fail" | "waived"
    detail: str


@dataclass
class FeasibilityReport:
    mode: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def fatal(self) -> bool:
        return any(c.status == "fail" for c in self.checks)

    def add(self, name, ok, detail, waivable=True):
        if ok:
            status = "pass"
        elif self.mode == "desk" and waivable:
            status = "waived"
        else:
            status = "fail"
        self.checks.append(FeasibilityCheck(name, status, detail))


def feasibility(params: ProductParams) -> FeasibilityReport:
    """Check the construction hypotheses; desk mode waives all but fatal ones.

    Fatal in both modes: non-prime, repeated, or even factors, and boost
    values escaping [0,1].
    """
    rep = FeasibilityReport(params.mode)
    fac = params.factors
    a, eps = params.alpha, params.epsilon
    s = len(fac)

    distinct = len(set(fac)) == len(fac)
    all_prime = all(is_prime(m) and m % 2 == 1 for m in fac)
    rep.add("factors-odd-distinct-primes", distinct and all_prime, f"factors={fac}", waivable=False)
    if not (distinct and all_prime):
        return rep

    ap = params.alpha_prime
    rep.add("boost-in-range", ap <= 1 + 1e-12, f"alpha'={ap:.6g}", waivable=False)
    if s >= 2:
        rep.add(
            "model-mean-in-range",
            ap <= 0.5 + 1e-12,
            f"alpha'={ap:.6g} must be <= 1/2 to host the model profile",
            waivable=False,
        )

    rep.add("alpha-window", 0 < a <= 0.25, f"alpha={a}")
    rep.add("epsilon-window", 0 < eps <= STRICT_EPS_MAX, f"eps={eps}, strict max {STRICT_EPS_MAX:.3g}")
    lo, hi = eps ** (-1 / 3) / 2, eps ** (-1 / 3)
    # the window ends are float powers; tolerate one part in 1e12 at the edges
    rep.add(
        "m1-window",
        lo < fac[0] <= hi * (1 + 1e-12),
        f"m1={fac[0]}, window ({lo:.6g}, {hi:.6g}]",
    )

    n_prev = fac[0]
    for i in range(2, s + 1):
        m = fac[i - 1]
        rep.add(f"m{i}-growth-lower", m > n_prev**6, f"m{i}={m} vs n_{i-1}^6={n_prev**6}")
        exponent = 0.5 * 64.0**-2 * 150.0 ** (i - 1) * eps**0.25 * n_prev
        try:
            upper = math.exp(exponent) / 2
        except OverflowError:
            upper = math.inf
        rep.add(f"m{i}-growth-upper", m < upper, f"m{i}={m} vs exp(...)/2={upper:.6g}")
        n_prev *= m
    rep.notes.append(
        "growth-upper uses exp(...)/2 from the headline statement; the modulus "
        "approximation argument quotes exp(...) without the /2"
    )

    s_max = math.log(eps**-0.25 * a**6 / 8, 150) if eps > 0 else math.inf
    rep.add("level-count", s <= s_max, f"s={s} vs log150(eps^-1/4 alpha^6 / 8)={s_max:.4g}")

    if params.tower_c is not None:
        n = 1
        for m in fac:
            n *= m
        from .aps import tower

        bound_h = params.tower_c * math.log2(1 / eps)
        ok = n <= tower(max(0, int(bound_h)))
        rep.checks.append(
            FeasibilityCheck(
                "tower-scale (informational)",
                "pass" if ok else "waived",
                f"n={n} vs tower({params.tower_c}*log2(1/eps)={bound_h:.3g})",
            )
        )
    return rep


# ---------------------------------------------------------------------------
# level states


@dataclass
class LevelState:
    level: int
    factors: tuple  # m_1..m_i
    values: np.ndarray  # f_i over Z_{n_i}, canonical labelling
    alpha: float
    alpha_prime: float
    density_table: np.ndarray  # per-d density for all d in Z_{n_i}
    parent: "LevelState | None" = None
    modified: np.ndarray | None = None  # bool over Z_{n_{i-1}}
    coset_a: np.ndarray | None = None
    coset_b: np.ndarray | None = None
    mu_requested: float = 0.0
    mu_effective: float = 0.0

    @property
    def n(self) -> int:
        out = 1
        for m in self.factors:
            out *= m
        return out

    @property
    def m_set_size(self) -> int:
        return 0 if self.modified is None else int(self.modified.sum())


def build_level1(alpha: float, m1: int) -> LevelState:
    """The deterministic base profile on Z_{m_1}."""
    if not is_prime(m1) or m1 % 2 == 0:
        raise DomainError(f"m1={m1} must be an odd prime")
    ap = alpha * (1 + 1 / (m1 - 1))
    if ap > 1 + 1e-12:
        raise InfeasibleError(f"boost value alpha'={ap:.6g} exceeds 1 at m1={m1}")
    values = np.full(m1, ap)
    values[0] = 0.0
    return LevelState(
        level=1,
        factors=(m1,),
        values=values,
        alpha=alpha,
        alpha_prime=ap,
        density_table=perdiff_table_dense(values),
    )


def random_modify_level(
    state: LevelState,
    m_next: int,
    rng: np.random.Generator,
    mu_next: float,
    clamp: bool = True,
) -> LevelState:
    """Extend f_{i-1} to Q_i, overwriting fibers over floor(mu*n_{i-1})
    alpha'-points with randomly reparametrized model profiles.

    The coset set is the lexicographically first block of alpha'-points (in
    the canonical element order), so only (a_w, b_w) carry randomness.  With
    ``clamp`` (desk behaviour) the coset count is capped by the number of
    available alpha'-points; strict callers pass clamp=False and get an error
    instead.
    """
    if not is_prime(m_next) or m_next % 2 == 0:
        raise DomainError(f"m={m_next} must be an odd prime")
    if m_next in state.factors:
        raise DomainError(f"factor {m_next} repeats")
    n_prev = state.n
    ap = state.alpha_prime
    avail = np.flatnonzero(np.abs(state.values - ap) <= _ALPHA_PRIME_TOL)
    want = int(mu_next * n_prev)
    if want > len(avail):
        if not clamp:
            raise InfeasibleError(
                f"need {want} alpha'-points for mu={mu_next:.4g}, only {len(avail)} exist"
            )
        want = len(avail)
    chosen = avail[:want]

    g = build_model_fn(ap, m_next)
    n_new = n_prev * m_next
    x = np.arange(n_new, dtype=np.int64)
    w_of = x % n_prev
    y_of = x % m_next

    values = state.values[w_of].copy()
    coset_a = np.zeros(n_prev, dtype=np.int64)
    coset_b = np.zeros(n_prev, dtype=np.int64)
    modified = np.zeros(n_prev, dtype=bool)
    if want:
        coset_a[chosen] = rng.integers(1, m_next, size=want)
        coset_b[chosen] = rng.integers(0, m_next, size=want)
        modified[chosen] = True
        mask = modified[w_of]
        values[mask] = g.values[(coset_a[w_of[mask]] * y_of[mask] + coset_b[w_of[mask]]) % m_next]

    new = LevelState(
        level=state.level + 1,
        factors=state.factors + (m_next,),
        values=values,
        alpha=state.alpha,
        alpha_prime=ap,
        density_table=np.empty(0),  # filled by verify_level
        parent=state,
        modified=modified,
        coset_a=coset_a,
        coset_b=coset_b,
        mu_requested=mu_next,
        mu_effective=want / n_prev,
    )
    new.density_table = _assemble_density_table(new)
    return new


def _model_lambda_table(alpha_prime: float, m: int) -> np.ndarray:
    """Per-difference densities of the model profile on Z_m, all m at once."""
    g = build_model_fn(alpha_prime, m)
    return perdiff_table_sparse(g.spectrum)


def _ghat_map(alpha_prime: float, m: int) -> dict:
    out = {0: complex(alpha_prime)}
    for r in (1, 2, m - 2, m - 1):
        out[r] = complex(-alpha_prime / 4)
    return out


def _assemble_density_table(state: LevelState) -> np.ndarray:
    """Exact per-difference densities for every d in Q_i (see module docstring)."""
    prev = state.parent
    n_prev = prev.n
    m = state.factors[-1]
    n_new = n_prev * m
    ap = state.alpha_prime

    lam = _model_lambda_table(ap, m)
    ghat = _ghat_map(ap, m)
    supp = model_support(m)

    modified = state.modified
    prev_vals = prev.values
    const_cube = float(np.sum(prev_vals[~modified] ** 3))

    # differences with d_{[i-1]} = 0: fiber-diagonal densities as a function of d_i
    diag = np.full(m, const_cube)
    e = np.arange(m, dtype=np.int64)
    for w in np.flatnonzero(modified):
        diag += lam[(state.coset_a[w] * e) % m]
    diag /= n_prev

    # differences with d' = d_{[i-1]} != 0
    base = prev.density_table
    ripples: dict[int, list] = {}
    mod_idx = np.flatnonzero(modified)
    if mod_idx.size:
        for dprime in range(1, n_prev):
            # any coset triple touching a modified fiber
            touched = set()
            for w in mod_idx:
                for j in (0, 1, 2):
                    touched.add((w - j * dprime) % n_prev)
            terms: list = []
            for w in sorted(touched):
                legs = [(w + j * dprime) % n_prev for j in (0, 1, 2)]
                jj = [j for j in (0, 1, 2) if modified[legs[j]]]
                if not jj:
                    continue
                avals = [int(state.coset_a[legs[j]]) for j in jj]
                bvals = [int(state.coset_b[legs[j]]) for j in jj]
                const_prod = 1.0
                for j in (0, 1, 2):
                    if j not in jj:
                        const_prod *= prev_vals[legs[j]]
                if const_prod == 0.0:
                    continue
                for rvec in itertools.product(supp, repeat=len(jj)):
                    if all(r == 0 for r in rvec):
                        continue
                    if sum(r * av for r, av in zip(rvec, avals)) % m:
                        continue
                    coef = const_prod * complex(
                        np.exp(-2j * np.pi * (sum(r * bv for r, bv in zip(rvec, bvals)) % m) / m)
                    )
                    for r, j in zip(rvec, jj):
                        coef *= ghat[r]
                    k = sum(j * r * av for r, av, j in zip(rvec, avals, jj)) % m
                    terms.append((k, coef))
            if terms:
                ripples[dprime] = terms

    # assemble the full Z_{n_new} table
    d = np.arange(n_new, dtype=np.int64)
    w_idx = d % n_prev
    table = base[w_idx].astype(np.float64)
    rows0 = np.flatnonzero(w_idx == 0)
    table[rows0] = diag[rows0 % m]
    for dprime, terms in ripples.items():
        rows = np.flatnonzero(w_idx == dprime)
        ee = rows % m
        corr = np.zeros(len(rows), dtype=np.complex128)
        for k, coef in terms:
            corr += coef * np.exp((-2j * np.pi / m) * ((k * ee) % m))
        table[rows] = base[dprime] + corr.real / n_prev
    return table


# ---------------------------------------------------------------------------
# verification


@dataclass
class LevelVerdict:
    passed: bool
    target: float
    max_offdiag: float
    argmax_d: int
    violations: list  # first few (d, density)


def verify_level(state: LevelState, epsilon: float, max_report: int = 20) -> LevelVerdict:
    """Exhaustive check that every nonzero difference has density at most
    alpha^3 (1 - epsilon)."""
    target = state.alpha**3 * (1 - epsilon)
    table = state.density_table
    off = table[1:]
    arg = int(off.argmax()) + 1
    bad = np.flatnonzero(off > target + 1e-12) + 1
    return LevelVerdict(
        passed=bad.size == 0,
        target=target,
        max_offdiag=float(off.max()),
        argmax_d=arg,
        violations=[(int(d), float(table[d])) for d in bad[:max_report]],
    )


# ---------------------------------------------------------------------------
# full construction


@dataclass
class ConstructionCert:
    seed: int
    mode: str
    alpha: float
    epsilon: float
    factors: tuple
    retries: list
    max_offdiag_density: float
    argmax_d: int
    mean_cube: float
    alpha_star: float
    fraction_at_alpha_star: float
    mu_requested: tuple
    mu_effective: tuple
    conclusions: dict

    @property
    def passed(self) -> bool:
        return all(self.conclusions.values())

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "mode": self.mode,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "factors": [int(m) for m in self.factors],
            "retries": self.retries,
            "max_offdiag_density": self.max_offdiag_density,
            "argmax_d": int(self.argmax_d),
            "mean_cube": self.mean_cube,
            "alpha_star": self.alpha_star,
            "fraction_at_alpha_star": self.fraction_at_alpha_star,
            "mu_requested": list(self.mu_requested),
            "mu_effective": list(self.mu_effective),
            "conclusions": self.conclusions,
            "passed": self.passed,
        }


def _level_rng(seed: int, level: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), level, attempt]))


def construct_product(
    params: ProductParams,
    seed: int,
    max_retries_per_level: int = 20,
) -> tuple[DensityFn, ConstructionCert]:
    """Run the construction level by level, verifying exhaustively and
    retrying each level with fresh randomness on failure.

    Raises RetriesExhausted with a log carrying the failing level's best
    attempt when no retry passes.
    """
    rep = feasibility(params)
    if rep.fatal:
        bad = [c for c in rep.checks if c.status == "fail"]
        raise InfeasibleError("; ".join(f"{c.name}: {c.detail}" for c in bad))

    alpha, eps, fac = params.alpha, params.epsilon, params.factors
    strict = params.mode == "strict"
    state = build_level1(alpha, fac[0])
    verdict = verify_level(state, eps)
    retries = [{"level": 1, "attempts": 1, "passed": verdict.passed}]
    if not verdict.passed:
        raise RetriesExhausted(
            f"level 1 fails at every retry: max density {verdict.max_offdiag:.6g} "
            f"> target {verdict.target:.6g} (epsilon too large for m1={fac[0]})",
            log={"level": 1, "verdict": verdict, "retries": retries},
        )

    for i in range(2, len(fac) + 1):
        mu_i = params.mu[i - 1]
        best = None
        passed = False
        for attempt in range(max_retries_per_level):
            rng = _level_rng(seed, i, attempt)
            cand = random_modify_level(state, fac[i - 1], rng, mu_i, clamp=not strict)
            verdict = verify_level(cand, eps)
            if best is None or verdict.max_offdiag < best[1].max_offdiag:
                best = (cand, verdict, attempt)
            if verdict.passed:
                state = cand
                retries.append({"level": i, "attempts": attempt + 1, "passed": True})
                passed = True
                break
        if not passed:
            retries.append({"level": i, "attempts": max_retries_per_level, "passed": False})
            raise RetriesExhausted(
                f"level {i} failed verification on all {max_retries_per_level} attempts; "
                f"best attempt: max density {best[1].max_offdiag:.6g} at d={best[1].argmax_d} "
                f"> target {best[1].target:.6g}",
                log={
                    "level": i,
                    "retries": retries,
                    "best_verdict": best[1],
                    "best_state": best[0],
                },
            )

    final = verify_level(state, eps)
    mean_cube = float((state.values**3).mean())
    ap = params.alpha_prime
    frac = float(np.mean(np.abs(state.values - ap) <= _ALPHA_PRIME_TOL))
    cert = ConstructionCert(
        seed=seed,
        mode=params.mode,
        alpha=alpha,
        epsilon=eps,
        factors=fac,
        retries=retries,
        max_offdiag_density=final.max_offdiag,
        argmax_d=final.argmax_d,
        mean_cube=mean_cube,
        alpha_star=ap,
        fraction_at_alpha_star=frac,
        mu_requested=tuple(params.mu),
        mu_effective=tuple(
            [0.0] + [st.mu_effective for st in _state_chain(state)[1:]]
        ),
        conclusions={
            "max_offdiag_le_target": bool(final.passed),
            "mean_cube_le_3_2_alpha3": bool(mean_cube <= 1.5 * alpha**3 + 1e-12),
            "alpha_star_in_window": bool(alpha - 1e-12 <= ap <= alpha * (1 + eps**0.25) + 1e-12),
            "fraction_ge_3_4": bool(frac >= 0.75),
        },
    )
    domain = product(fac) if len(fac) > 1 else cyclic(fac[0])
    return DensityFn(domain, state.values), cert


def _state_chain(state: LevelState) -> list:
    chain = []
    cur = state
    while cur is not None:
        chain.append(cur)
        cur = cur.parent
    return chain[::-1]
