"""Energy-barrier paths and the chain-comparison bound.

The minimum-energy construction moves a particle from the origin to site 2^m
in 3^m flips while never holding more than m+2 particles; gluing two such
paths back to back connects arbitrary configurations on [0, 2^m].  Together
with the wave chain they yield the explicit relaxation-time comparison
tau_East <= B * L * tau_wave.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BudgetExceeded, CapExceeded
from .model import DOWN, UP, Configuration, ModelParams, enumerate_transitions
from .spectral import build_generator, spectral_gap, stationary_vector

LM_PATH_CAP = 8  # 3^8 = 6561 materialized steps
H_ORACLE_STATE_BUDGET = 1 << 22


@dataclass
class TransitionPath:
    """Ordered configurations; every step is a legal flip, or a hold if allowed."""

    steps: list[Configuration]
    allow_holds: bool = False

    @property
    def length(self) -> int:
        return len(self.steps) - 1

    @property
    def max_energy(self) -> int:
        return max(c.particle_count() for c in self.steps)

    def is_legal(self) -> bool:
        params = ModelParams(p=0.5, n=self.steps[0].n)  # rates irrelevant to legality
        for a, b in zip(self.steps, self.steps[1:]):
            if a.bits == b.bits:
                if not self.allow_holds:
                    return False
                continue
            diff = a.bits ^ b.bits
            site = diff.bit_length() - 1
            if diff != 1 << site:
                return False
            if site not in {t.site for t in enumerate_transitions(a, params)}:
                return False
        return True

    def exit_count(self, c: Configuration) -> int:
        """Number of steps leaving configuration c (holds do not leave)."""
        return sum(
            1
            for a, b in zip(self.steps, self.steps[1:])
            if a.bits == c.bits and b.bits != c.bits
        )


def _lm_bits(m: int) -> list[int]:
    """Occupancy words of the recursive path from {0} to {0, 2^m}."""
    if m == 0:
        return [0b1, 0b11]
    prev = _lm_bits(m - 1)
    shift = 1 << (m - 1)
    first = prev
    second = [1 | (b << shift) for b in prev]
    third = [(1 << (1 << m)) | b for b in reversed(prev)]
    # seams coincide by construction; drop the duplicates
    return first + second[1:] + third[1:]


def lm_path(m: int, cap: int = LM_PATH_CAP) -> TransitionPath:
    """Path from {0} to {0, 2^m}: length 3^m, peak particle count m+2.

    Recursive construction: walk the scale-(m-1) path, replay it shifted by
    2^(m-1) on top of the midpoint particle, then walk it backwards to remove
    the midpoint (the middle third is where the extra particle lives).
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m > cap:
        raise CapExceeded(f"m={m} exceeds cap {cap} (3^m steps would be materialized)")
    n = 1 << m if m > 0 else 1
    return TransitionPath([Configuration(b, n) for b in _lm_bits(m)])


def first_occupation_steps(path: TransitionPath) -> dict[int, int]:
    """Site -> index of the first path step where the site is occupied."""
    seen: dict[int, int] = {}
    for u, c in enumerate(path.steps):
        bits = c.bits
        while bits:
            site = (bits & -bits).bit_length() - 1
            seen.setdefault(site, u)
            bits &= bits - 1
    return seen


def _half_path_bits(w: Configuration, base: TransitionPath) -> list[int]:
    """Steps from w to the base path's endpoint: initial particles persist
    until the base path first occupies their site, then follow the base path."""
    out = []
    covered = 0
    for c in base.steps:
        covered |= c.bits
        out.append(c.bits | (w.bits & ~covered))
    return out


def distinguished_path(w: Configuration, w2: Configuration, m: int | None = None,
                       cap: int = LM_PATH_CAP) -> TransitionPath:
    """Canonical path of length exactly 2*3^m between configurations on [0, 2^m].

    Both halves ride the lm_path construction through {0, 2^m}; a step where a
    retained initial particle already sits on the site the base path is about
    to fill is a hold, so the step count stays exactly 2*3^m.
    """
    if w.n != w2.n:
        raise ValueError("endpoint configurations live on different site spaces")
    if m is None:
        m = w.n.bit_length() - 1
    if (1 << m) != w.n:
        raise ValueError(f"site space [0, {w.n}] is not [0, 2^m]")
    base = lm_path(m, cap=cap)
    forward = _half_path_bits(w, base)
    backward = _half_path_bits(w2, base)
    bits = forward + backward[-2::-1]
    return TransitionPath([Configuration(b, w.n) for b in bits], allow_holds=True)


def h_oracle(x: Configuration, x2: Configuration, energy_cap: int = 16,
             site_cap: int | None = None) -> int | None:
    """Exact energy barrier h(x, x2) by BFS under an increasing energy ceiling.

    Returns the least k such that x and x2 are connected through configurations
    of particle count <= k, or None if that exceeds energy_cap.  Flips above
    the highest endpoint site can be projected away without raising any
    energy, so site_cap defaults to that maximum.
    """
    if site_cap is None:
        site_cap = max(x.rightmost(), x2.rightmost(), 1)
    if (site_cap + 1) * (1 << site_cap) > H_ORACLE_STATE_BUDGET:
        raise BudgetExceeded(f"site_cap {site_cap} exceeds the BFS budget")
    if x.rightmost() > site_cap or x2.rightmost() > site_cap:
        raise ValueError("endpoint occupies a site above site_cap")

    start = x.bits
    goal = x2.bits
    nbits = site_cap  # free sites 1..site_cap
    energies = [1 + (b >> 1).bit_count() for b in range(1, (1 << (nbits + 1)), 2)]

    for k in range(max(x.particle_count(), x2.particle_count()), energy_cap + 1):
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for bits in frontier:
                if bits == goal:
                    return k
                for site in range(1, site_cap + 1):
                    if not (bits >> (site - 1)) & 1:
                        continue  # left neighbor empty: site is blocked
                    flipped = bits ^ (1 << site)
                    if energies[flipped >> 1] > k or flipped in seen:
                        continue
                    seen.add(flipped)
                    nxt.append(flipped)
            frontier = sorted(nxt)  # deterministic exploration order
        if goal in seen:
            return k
    return None


TAU_WAVE_BOUND = 10.0 / 3.0


@dataclass
class ComparisonConstants:
    """Closed-form constants of the comparison tau_East <= B * L * tau_wave."""

    m: int
    p: float
    L: int = field(init=False)
    log_B: float = field(init=False)
    constraint_ok: bool = field(init=False)  # 2^m >= 10/p + 2

    def __post_init__(self):
        self.L = 2 * 3**self.m
        self.log_B = (
            self.m * math.log(2.0)
            + math.log(2.0)
            + self.m * math.log(3.0)
            - (self.m + 2) * math.log(self.p)
            - (1 << self.m) * math.log1p(-self.p)
        )
        self.constraint_ok = (1 << self.m) >= 10.0 / self.p + 2.0

    @property
    def B(self) -> float:
        try:
            return math.exp(self.log_B)
        except OverflowError:
            return math.inf

    @property
    def log_tau_upper(self) -> float:
        return math.log(TAU_WAVE_BOUND) + self.log_B + math.log(self.L)

    @property
    def tau_upper(self) -> float:
        try:
            return math.exp(self.log_tau_upper)
        except OverflowError:
            return math.inf

    @property
    def normalized_exponent(self) -> float:
        """log tau_upper * log 2 / log^2(1/p); tends to 1 with minimal m(p)."""
        return self.log_tau_upper * math.log(2.0) / math.log(1.0 / self.p) ** 2


def minimal_admissible_m(p: float) -> int:
    """Smallest m with 2^m >= 10/p + 2."""
    m = 0
    while (1 << m) < 10.0 / p + 2.0:
        m += 1
    return m


def comparison_bound(m: int, p: float) -> ComparisonConstants:
    """Evaluate L = 2*3^m and B = 2^m * 2*3^m * p^-(m+2) * (1-p)^-(2^m) in log space."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0,1), got {p}")
    if m < 0:
        raise ValueError("m must be >= 0")
    return ComparisonConstants(m=m, p=p)


@dataclass
class ComparisonSanity:
    """Both sides of the comparison inequality computed exactly at small n."""

    n: int
    p: float
    m: int
    tau_east: float
    tau_wave: float
    log_bound: float  # log(B * L * tau_wave)

    @property
    def holds(self) -> bool:
        return math.log(self.tau_east) <= self.log_bound


def comparison_sanity(n: int, p: float, m: int) -> ComparisonSanity:
    """Exact check tau_East(n,p) <= B * L * tau_wave(n,p,v=2^m) for n <= 8."""
    if n > 8:
        raise ValueError("exact comparison check is limited to n <= 8")
    if (1 << m) < n:
        raise ValueError(f"need 2^m >= n, got m={m}, n={n}")
    params = ModelParams(p=p, n=n)
    pi = stationary_vector(params)
    tau_east = spectral_gap(build_generator(params, 1), pi).tau
    tau_wave = spectral_gap(build_generator(params, 1 << m), pi).tau
    consts = comparison_bound(m, p)
    log_bound = consts.log_B + math.log(consts.L) + math.log(tau_wave)
    return ComparisonSanity(n=n, p=p, m=m, tau_east=tau_east, tau_wave=tau_wave,
                            log_bound=log_bound)
