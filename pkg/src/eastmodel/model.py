"""Finite East chain: configurations, flip rules and the product stationary measure.

Site 0 is frozen occupied, sites 1..n are free.  A site may flip only when the
site to its left is occupied; flip-up happens at rate p, flip-down at rate 1-p.
Everything else in the package (generators, paths, simulators) is built on the
three operations defined here.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_SITES = 4096  # bitmask configurations; exact 2^n enumeration is capped in spectral

UP = "up"
DOWN = "down"


@dataclass(frozen=True)
class Configuration:
    """Occupancy word over sites 0..n; bit i is site i, bit 0 always set."""

    bits: int
    n: int

    def __post_init__(self):
        if self.n < 1 or self.n > MAX_SITES:
            raise ValueError(f"n must be in 1..{MAX_SITES}, got {self.n}")
        if not self.bits & 1:
            raise ValueError("site 0 must be occupied")
        if self.bits >> (self.n + 1):
            raise ValueError(f"occupancy has bits above site {self.n}")

    @classmethod
    def from_string(cls, s: str) -> "Configuration":
        """Parse a 0/1 string, site 0 first ('11000' = sites 0 and 1 occupied)."""
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a 0/1 occupancy string: {s!r}")
        bits = 0
        for i, ch in enumerate(s):
            if ch == "1":
                bits |= 1 << i
        return cls(bits, len(s) - 1)

    @classmethod
    def from_sites(cls, sites, n: int) -> "Configuration":
        bits = 1
        for s in sites:
            bits |= 1 << s
        return cls(bits, n)

    def to_string(self) -> str:
        return "".join("1" if self.is_occupied(i) else "0" for i in range(self.n + 1))

    def is_occupied(self, site: int) -> bool:
        return bool((self.bits >> site) & 1)

    def occupied_sites(self):
        """All occupied sites including the frozen origin, ascending."""
        return tuple(i for i in range(self.n + 1) if (self.bits >> i) & 1)

    def particle_count(self) -> int:
        """Total number of particles, the frozen origin included."""
        return self.bits.bit_count()

    def free_particle_count(self) -> int:
        """Particles on sites 1..n (what the stationary weight sees)."""
        return (self.bits >> 1).bit_count()

    def rightmost(self) -> int:
        return self.bits.bit_length() - 1

    def index(self) -> int:
        """Row index of this configuration in a 2^n state table (origin dropped)."""
        return self.bits >> 1


def config_from_index(k: int, n: int) -> Configuration:
    if not 0 <= k < 1 << n:
        raise ValueError(f"index {k} out of range for n={n}")
    return Configuration((k << 1) | 1, n)


@dataclass(frozen=True)
class ModelParams:
    """Density p, chain length n and the master seed for derived RNG streams."""

    p: float
    n: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0,1), got {self.p}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class Transition:
    """A single legal flip: rate p when flipping up, 1-p when flipping down."""

    site: int
    direction: str
    rate: float


def enumerate_transitions(c: Configuration, params: ModelParams) -> list[Transition]:
    """All legal single-site flips of c: one per site whose left neighbor is occupied."""
    out = []
    for site in range(1, params.n + 1):
        if not c.is_occupied(site - 1):
            continue
        if c.is_occupied(site):
            out.append(Transition(site, DOWN, 1.0 - params.p))
        else:
            out.append(Transition(site, UP, params.p))
    return out


def stationary_weight(c: Configuration, params: ModelParams) -> float:
    """Bernoulli(p) product weight p^|c| (1-p)^(n-|c|) over the free sites."""
    k = c.free_particle_count()
    return params.p**k * (1.0 - params.p) ** (params.n - k)


def apply_flip(c: Configuration, site: int) -> Configuration:
    """Toggle one free site; the frozen origin is never touched."""
    if site == 0:
        raise ValueError("site 0 is frozen occupied and cannot flip")
    if not 1 <= site <= c.n:
        raise ValueError(f"site {site} out of range 1..{c.n}")
    return Configuration(c.bits ^ (1 << site), c.n)


def reverse_transition(t: Transition, params: ModelParams) -> Transition:
    if t.direction == UP:
        return Transition(t.site, DOWN, 1.0 - params.p)
    return Transition(t.site, UP, params.p)
