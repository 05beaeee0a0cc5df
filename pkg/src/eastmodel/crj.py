"""Coalescing-random-jumps process and the relaxation-time lower bound.

Particles sit on a subset S of {1..n} (site 0 is always alive).  The particle
at site i dies at rate p^D where D is the distance to the nearest alive site
below it; the test function g(x) = P(last-to-die site > n/2) plugs into the
variational characterization and certifies a lower bound on the relaxation
time of the East chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SubsetTooLarge
from .model import ModelParams
from .rng import substream
from .spectral import build_generator, spectral_gap, stationary_vector, variational_ratio

EXACT_PIPELINE_MAX_N = 12
EXACT_DP_MAX_PARTICLES = 20


def default_n(p: float) -> int:
    return math.floor(1.0 / p)


@dataclass(frozen=True)
class SiteSet:
    """Subset of {1..n} as a bitmask (bit j-1 is site j)."""

    mask: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.mask >> self.n:
            raise ValueError("mask has sites above n")

    @classmethod
    def from_sites(cls, sites, n: int) -> "SiteSet":
        mask = 0
        for s in sites:
            if not 1 <= s <= n:
                raise ValueError(f"site {s} outside 1..{n}")
            mask |= 1 << (s - 1)
        return cls(mask, n)

    def sites(self) -> tuple[int, ...]:
        return tuple(j + 1 for j in range(self.n) if (self.mask >> j) & 1)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def contains(self, site: int) -> bool:
        return 1 <= site <= self.n and bool((self.mask >> (site - 1)) & 1)

    def without(self, site: int) -> "SiteSet":
        return SiteSet(self.mask & ~(1 << (site - 1)), self.n)


@dataclass
class CrjOutcome:
    """Death order of one realization; the last entry is the survivor L(S)."""

    last: int
    order: list[tuple[int, float]]  # (site, death time), strictly increasing times


def _death_distances(mask: int) -> list[tuple[int, int]]:
    """(site, D) for every alive site, D = distance to nearest lower alive site."""
    full = (mask << 1) | 1  # bit i = site i, origin always alive
    out = []
    m = mask
    while m:
        bit = m & -m
        j = bit.bit_length()  # site index (bit j-1 set means site j)
        below = full & ((1 << j) - 1)
        out.append((j, j - (below.bit_length() - 1)))
        m ^= bit
    return out


def crj_simulate(s: SiteSet, p: float, seed: int | None = None,
                 rng: np.random.Generator | None = None) -> CrjOutcome:
    """One exact race: repeatedly sample the next death proportionally to rates.

    Death rates are handled in log space, so only the recorded clock (not the
    death order) can saturate for astronomically separated particles.
    """
    if len(s) == 0:
        raise ValueError("S must be nonempty")
    if rng is None:
        rng = substream(0 if seed is None else seed)
    log_p = math.log(p)
    mask = s.mask
    t = 0.0
    order: list[tuple[int, float]] = []
    while mask:
        dd = _death_distances(mask)
        logs = np.array([d * log_p for _, d in dd])
        scaled = np.exp(logs - logs.max())
        total = scaled.sum()
        t += rng.exponential() / (total * math.exp(logs.max()))
        victim = dd[rng.choice(len(dd), p=scaled / total)][0]
        order.append((victim, t))
        mask &= ~(1 << (victim - 1))
    return CrjOutcome(last=order[-1][0], order=order)


def _g_of_mask(mask: int, n: int, p: float, memo: dict[int, float]) -> float:
    if mask == 0:
        return 0.0
    cached = memo.get(mask)
    if cached is not None:
        return cached
    if mask & (mask - 1) == 0:
        site = mask.bit_length()
        val = 1.0 if 2 * site > n else 0.0
    else:
        dd = _death_distances(mask)
        dmin = min(d for _, d in dd)
        weights = [p ** (d - dmin) for _, d in dd]
        total = sum(weights)
        val = sum(
            w / total * _g_of_mask(mask & ~(1 << (site - 1)), n, p, memo)
            for (site, _), w in zip(dd, weights)
        )
    memo[mask] = val
    return val


def crj_exact_g(s: SiteSet, p: float) -> float:
    """P(L(S) > n/2) by exact dynamic programming over alive subsets of S."""
    if len(s) > EXACT_DP_MAX_PARTICLES:
        raise SubsetTooLarge(f"|S| = {len(s)} exceeds {EXACT_DP_MAX_PARTICLES}")
    if len(s) == 0:
        return 0.0
    return _g_of_mask(s.mask, s.n, p, {})


def crj_g_table(n: int, p: float) -> np.ndarray:
    """g over all 2^n occupancy masks in one sweep (killing a particle clears a bit,
    so every subproblem index is smaller than its parent)."""
    if n > EXACT_PIPELINE_MAX_N:
        raise SubsetTooLarge(f"exact g table requested for n = {n} > {EXACT_PIPELINE_MAX_N}")
    g = np.zeros(1 << n)
    for mask in range(1, 1 << n):
        if mask & (mask - 1) == 0:
            g[mask] = 1.0 if 2 * mask.bit_length() > n else 0.0
            continue
        dd = _death_distances(mask)
        dmin = min(d for _, d in dd)
        weights = [p ** (d - dmin) for _, d in dd]
        total = sum(weights)
        g[mask] = sum(
            w / total * g[mask & ~(1 << (site - 1))]
            for (site, _), w in zip(dd, weights)
        )
    return g


@dataclass
class GoodnessVerdict:
    admissible: bool
    good: bool
    a: int
    witness: tuple[int, int] | None = None
    case: str | None = None  # "ii" or "iii"


def barrier_scale(p: float) -> int:
    """a = ceil(4 log(1/p))."""
    return math.ceil(4.0 * math.log(1.0 / p))


def goodness_check(s: SiteSet, i: int, p: float) -> GoodnessVerdict:
    """Classify (S, i): admissible needs i in S with i-1 in S (or i = 1); good
    additionally needs a witness pair (k1, k2) in S isolating the interval."""
    a = barrier_scale(p)
    n = s.n
    admissible = s.contains(i) and (i == 1 or s.contains(i - 1))
    if not admissible:
        return GoodnessVerdict(False, False, a)
    sites = s.sites()
    for k1 in sites:
        for k2 in sites:
            if k1 > k2:
                continue
            if not (k1 <= i <= k2):
                continue
            if i != 1 and not (k1 <= i - 1 <= k2):
                continue
            if k2 < 2 * k1 - a:
                b = k2 - k1 + a
                blocked = any(
                    (k1 - b <= j < k1) or (k2 < j <= k2 + b) for j in sites
                )
                if not blocked:
                    return GoodnessVerdict(True, True, a, witness=(k1, k2), case="ii")
            else:
                if 2 * k2 <= n - a and not any(k2 < j <= 2 * k2 + a for j in sites):
                    return GoodnessVerdict(True, True, a, witness=(k1, k2), case="iii")
    return GoodnessVerdict(True, False, a)


def sample_Si(i: int, p: float, n: int | None = None, seed: int = 0,
              rng: np.random.Generator | None = None) -> SiteSet:
    """Random admissible companion set: contains i (and i-1 when i > 1), every
    other site independently with probability p."""
    if n is None:
        n = default_n(p)
    if not 1 <= i <= n:
        raise ValueError(f"i = {i} outside 1..{n}")
    if rng is None:
        rng = substream(seed)
    mask = 1 << (i - 1)
    if i > 1:
        mask |= 1 << (i - 2)
    for j in range(1, n + 1):
        if j in (i, i - 1):
            continue
        if rng.random() < p:
            mask |= 1 << (j - 1)
    return SiteSet(mask, n)


@dataclass
class BoundFunctions:
    """alpha/beta evaluated in log space plus their normalized exponents."""

    p: float
    n: int
    a: int
    m0: int | None
    log_alpha: float
    log_beta: float

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def beta(self) -> float:
        return math.exp(self.log_beta) if self.log_beta > -745 else 0.0

    @property
    def norm_alpha_exp(self) -> float:
        """log alpha * 2 log2 / log^2(1/p); tends to -1 as p drops."""
        return self.log_alpha * 2.0 * math.log(2.0) / math.log(1.0 / self.p) ** 2

    @property
    def norm_beta_exp(self) -> float:
        """log beta / log^2(1/p); tends to -2 as p drops."""
        return self.log_beta / math.log(1.0 / self.p) ** 2


def bound_functions(p: float, n: int | None = None) -> BoundFunctions:
    """alpha(p) = prod_{m<m0} 2^(m+2)(a+1)p and beta(p) = 4p^(a/2) + 2p^-1 exp(-p^(1-a)).

    alpha is vacuous (1) when no m satisfies 2^m (a+1) <= (n-a)/2.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0,1), got {p}")
    if n is None:
        n = default_n(p)
    a = barrier_scale(p)
    log_p = math.log(p)

    m0: int | None = None
    m = 0
    while 2**m * (a + 1) <= (n - a) / 2.0:
        m0 = m
        m += 1
    if m0 is None:
        log_alpha = 0.0
    else:
        log_alpha = sum(
            (k + 2) * math.log(2.0) + math.log(a + 1.0) + log_p for k in range(m0)
        )

    term1 = math.log(4.0) + (a / 2.0) * log_p
    exponent = (1.0 - a) * log_p  # log of p^(1-a), a large positive number
    term2 = math.log(2.0) - log_p - math.exp(min(exponent, 709.0))
    log_beta = float(np.logaddexp(term1, term2))
    return BoundFunctions(p=p, n=n, a=a, m0=m0, log_alpha=log_alpha, log_beta=log_beta)


def proof_inequality_spot_checks(p: float) -> dict[str, bool]:
    """Formula-level checks of the two proof-internal inequalities.

    For Y ~ exponential(1) and D = {Y > c}: E e^(Y/2) 1_D = 2 e^(-c/2) must not
    exceed 2 sqrt(P(D)).  The window recursion bbar(m+1) = a + 2 bbar(m),
    bbar(0) = 1 must satisfy a + bbar(m) = 2^m (a+1) exactly.
    """
    tail_ok = all(
        2.0 * math.exp(-c / 2.0) <= 2.0 * math.sqrt(math.exp(-c)) + 1e-12
        for c in (0.0, 0.5, 1.0, 2.0, 5.0)
    )
    a = barrier_scale(p)
    bbar = 1
    recursion_ok = a + bbar == a + 1  # m = 0 case: 2^0 (a+1)
    for m in range(1, 31):
        bbar = a + 2 * bbar
        recursion_ok = recursion_ok and a + bbar == (1 << m) * (a + 1)
    return {"exp_tail_bound": tail_ok, "window_recursion": recursion_ok}


@dataclass
class PipelineResult:
    n: int
    p: float
    var_g: float
    dirichlet: float
    ratio: float
    tau_exact: float | None = None

    @property
    def certified(self) -> bool | None:
        if self.tau_exact is None:
            return None
        return self.ratio <= self.tau_exact + 1e-9


def crj_test_function(n: int, p: float, source: str = "exact", mc_reps: int = 200,
                      seed: int = 0) -> np.ndarray:
    """g over the 2^n state table, exact by default, Monte Carlo above the DP range."""
    if source == "exact":
        return crj_g_table(n, p)
    if source != "mc":
        raise ValueError(f"unknown g source {source!r}")
    g = np.zeros(1 << n)
    for mask in range(1, 1 << n):
        rng = substream(seed, mask)
        s = SiteSet(mask, n)
        hits = sum(2 * crj_simulate(s, p, rng=rng).last > n for _ in range(mc_reps))
        g[mask] = hits / mc_reps
    return g


def lower_bound_pipeline(n: int, p: float, source: str = "exact", mc_reps: int = 200,
                         seed: int = 0, compute_tau: bool = True) -> PipelineResult:
    """Variance and Dirichlet form of the CRJ test function on the exact chain.

    The returned ratio is a certified lower bound on the relaxation time of
    the East chain on sites 0..n.
    """
    g = crj_test_function(n, p, source=source, mc_reps=mc_reps, seed=seed)
    params = ModelParams(p=p, n=n)
    gen = build_generator(params, 1)
    pi = stationary_vector(params)
    var_g, energy, ratio = variational_ratio(g, gen, pi)
    tau = spectral_gap(gen, pi).tau if compute_tau else None
    return PipelineResult(n=n, p=p, var_g=var_g, dirichlet=energy, ratio=ratio,
                          tau_exact=tau)


@dataclass
class _CoupledState:
    mask: int
    order: list[tuple[int, float]] = field(default_factory=list)

    def active_edges(self) -> list[tuple[int, int, int]]:
        """(site, nearest lower alive site, D) for each alive particle."""
        return [(site, site - d, d) for site, d in _death_distances(self.mask)]


def crj_coupling(s: SiteSet, i: int, p: float, seed: int = 0,
                 rng: np.random.Generator | None = None) -> bool:
    """Coupled races from S and S minus {i}; True when the survivors differ.

    Both processes consume one family of Poisson clocks indexed by the edge
    (dying site, nearest lower alive site), so whenever the edge is active in
    both processes the coalescence happens at the same instant in both.
    """
    if not s.contains(i):
        raise ValueError(f"site {i} not in S")
    if len(s) < 2:
        raise ValueError("need |S| >= 2")
    if rng is None:
        rng = substream(seed)
    log_p = math.log(p)

    proc_a = _CoupledState(s.mask)
    proc_b = _CoupledState(s.without(i).mask)
    epochs: dict[tuple[int, int], float] = {}
    t = 0.0

    def wait(d: int) -> float:
        scale = math.exp(-d * log_p)  # 1 / p^d, may overflow to inf
        return rng.exponential() * scale

    while proc_a.mask or proc_b.mask:
        active: dict[tuple[int, int], int] = {}
        for proc in (proc_a, proc_b):
            for site, low, d in proc.active_edges():
                active[(site, low)] = d
        for edge, d in active.items():
            if edge not in epochs:
                epochs[edge] = t + wait(d)
            while epochs[edge] <= t:  # stale epochs elapsed while the edge was inactive
                epochs[edge] += wait(d)
        edge = min(active, key=lambda e: (epochs[e], e))
        t = epochs[edge]
        site, low = edge
        for proc in (proc_a, proc_b):
            bit = 1 << (site - 1)
            if proc.mask & bit:
                full = (proc.mask << 1) | 1
                if (full & ((1 << site) - 1)).bit_length() - 1 == low:
                    proc.mask &= ~bit
                    proc.order.append((site, t))
        epochs[edge] += wait(active[edge])

    return proc_a.order[-1][0] != proc_b.order[-1][0]
