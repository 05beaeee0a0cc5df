"""Event-driven continuous-time simulation of the East process.

Each occupied site carries a rate-1 pulse clock; a pulse resets the site to
its East to occupied with probability p.  Realized with one global clock:
wait exponential(#occupied pulse sites), then pick the pulsing site uniformly.
Used for quantities outside exact-diagonalization range: front propagation
from a single particle and the single-spin autocorrelation time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FrontRunaway, InsufficientConditioning
from .model import Configuration, ModelParams
from .rng import substream

DEFAULT_SITE_CAP = 1 << 20


class EastProcess:
    """Mutable simulation state: occupancy, clock, front and the RNG stream.

    bounded=True runs the chain on sites 0..n (pulses from sites 0..n-1 only),
    matching the exact finite generator; bounded=False runs on Z+ with a
    growable site array.
    """

    def __init__(self, params: ModelParams, init: Configuration | None = None,
                 bounded: bool | None = None, site_cap: int = DEFAULT_SITE_CAP,
                 rng: np.random.Generator | None = None):
        self.params = params
        self.rng = rng if rng is not None else substream(params.seed)
        self.site_cap = site_cap
        if bounded is None:
            bounded = init is not None
        self.bounded = bounded
        if init is None:
            occupied = (0,)
        else:
            occupied = init.occupied_sites()
        size = params.n + 1 if bounded else max(64, 2 * (max(occupied) + 2))
        self.occ = np.zeros(size, dtype=bool)
        self.occ[list(occupied)] = True
        self.clock = 0.0
        self.rightmost = int(max(occupied))
        self.front = self.rightmost

    def _pulse_sites(self) -> np.ndarray:
        if self.bounded:
            return np.flatnonzero(self.occ[: self.params.n])
        return np.flatnonzero(self.occ[: self.rightmost + 1])

    def _ensure(self, site: int) -> None:
        if site >= self.site_cap:
            raise FrontRunaway(f"site {site} exceeds cap {self.site_cap}")
        if site >= len(self.occ):
            grown = np.zeros(min(self.site_cap, 2 * (site + 1)), dtype=bool)
            grown[: len(self.occ)] = self.occ
            self.occ = grown

    def step(self, horizon: float):
        """Advance one pulse; returns (t, site, new_state) or None at the horizon."""
        sites = self._pulse_sites()
        dt = self.rng.exponential() / len(sites)
        if self.clock + dt > horizon:
            self.clock = horizon
            return None
        self.clock += dt
        source = int(sites[self.rng.integers(len(sites))])
        target = source + 1
        if not self.bounded:
            self._ensure(target)
        occupied = bool(self.rng.random() < self.params.p)
        self.occ[target] = occupied
        if occupied:
            if target > self.rightmost:
                self.rightmost = target
                self.front = max(self.front, target)
        elif target == self.rightmost:
            self.rightmost = int(np.flatnonzero(self.occ[: target + 1])[-1])
        return self.clock, target, int(occupied)


def simulate_east(params: ModelParams, horizon: float,
                  init: Configuration | None = None,
                  site_cap: int = DEFAULT_SITE_CAP,
                  rng: np.random.Generator | None = None) -> list[tuple[float, int, int]]:
    """Pulse trajectory [(time, reset site, new state), ...] up to the horizon.

    init=None starts from a single particle at the origin on unbounded sites;
    a Configuration init runs the finite chain on sites 0..n.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    proc = EastProcess(params, init=init, site_cap=site_cap, rng=rng)
    events = []
    while proc.clock < horizon:
        ev = proc.step(horizon)
        if ev is None:
            break
        events.append(ev)
    return events


@dataclass
class FrontStats:
    """First-passage times of the running front past x/p, one row per replica."""

    thresholds: list[float]          # the x values
    levels: list[float]              # x / p, the actual site levels
    hit_times: np.ndarray            # (replicas, len(thresholds)), NaN = censored
    time_budget: float

    @property
    def replicas(self) -> int:
        return self.hit_times.shape[0]

    def survival(self, times: np.ndarray) -> np.ndarray:
        """Empirical P(threshold hit by t): (len(times), len(thresholds))."""
        hit = self.hit_times[None, :, :] <= times[:, None, None]
        return hit.mean(axis=1)


def front_excursion(params: ModelParams, time_budget: float, thresholds,
                    replicas: int, site_cap: int = DEFAULT_SITE_CAP) -> FrontStats:
    """Watch the front of the single-particle process cross each x/p level."""
    thresholds = sorted(float(x) for x in thresholds)
    if not thresholds:
        raise ValueError("need at least one threshold")
    levels = [x / params.p for x in thresholds]
    hits = np.full((replicas, len(thresholds)), np.nan)
    for r in range(replicas):
        proc = EastProcess(params, init=None, site_cap=site_cap,
                           rng=substream(params.seed, r))
        pending = 0
        while pending < len(levels) and proc.clock < time_budget:
            ev = proc.step(time_budget)
            if ev is None:
                break
            while pending < len(levels) and proc.front >= levels[pending]:
                hits[r, pending] = ev[0]
                pending += 1
    return FrontStats(thresholds=thresholds, levels=levels, hit_times=hits,
                      time_budget=time_budget)


@dataclass
class AutocorrEstimate:
    """Conditional occupation curve P(X_probe(t)=1 | X_probe(0)=1) - p and its fit."""

    probe: int
    lags: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    fit_window: tuple[int, int]      # slice bounds into the lag grid
    tau0: float
    tau0_se: float
    conditioned_replicas: int


def estimate_tau0(params: ModelParams, horizon: float, replicas: int,
                  probe: int | None = None, lag_count: int = 25,
                  min_conditioned: int = 20) -> AutocorrEstimate:
    """Single-spin autocorrelation time from a stationary start.

    Replicas start i.i.d. Bernoulli(p); only those with the probe initially
    occupied enter the estimate.  The tail fit uses least squares on the log
    of the curve over the window where it still exceeds 5 standard errors.
    """
    n = params.n
    if probe is None:
        probe = n // 2
    if not 1 <= probe <= n:
        raise ValueError(f"probe {probe} outside 1..{n}")
    lags = np.linspace(0.0, horizon, lag_count)
    kept_curves = []
    for r in range(replicas):
        rng = substream(params.seed, r)
        bits = 1 | int(rng.integers(0, 1 << n, dtype=np.uint64)) << 1
        init = Configuration(bits, n)
        # conditioning event: probe occupied at time zero
        if not init.is_occupied(probe):
            continue
        events = simulate_east(params, horizon, init=init, rng=rng)
        toggles = [(t, state) for t, site, state in events if site == probe]
        curve = np.empty(lag_count)
        state, k = 1, 0
        for j, lag in enumerate(lags):
            while k < len(toggles) and toggles[k][0] <= lag:
                state = toggles[k][1]
                k += 1
            curve[j] = state
        kept_curves.append(curve)
    if len(kept_curves) < min_conditioned:
        raise InsufficientConditioning(
            f"only {len(kept_curves)} replicas had the probe occupied at t=0")
    curves = np.array(kept_curves)
    kept = curves.shape[0]
    estimates = curves.mean(axis=0) - params.p
    std_errors = curves.std(axis=0, ddof=1) / math.sqrt(kept)

    # fit window: from lag 0 out to the last lag still 5 SE above zero
    significant = estimates > 5 * np.maximum(std_errors, 1e-12)
    end = 0
    for j in range(lag_count):
        if significant[j]:
            end = j
        else:
            break
    if end < 3:
        raise InsufficientConditioning("too few significant lags for a tail fit")
    window = (1, end + 1)  # skip lag 0: it is exactly 1-p by conditioning
    t = lags[window[0]:window[1]]
    y = np.log(estimates[window[0]:window[1]])
    design = np.vstack([np.ones_like(t), t]).T
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(len(t) - 2, 1)
    slope_var = float(resid @ resid / dof / ((t - t.mean()) ** 2).sum())
    slope = float(coef[1])
    if slope >= 0:
        raise InsufficientConditioning("tail fit produced a non-decaying curve")
    tau0 = -1.0 / slope
    tau0_se = math.sqrt(slope_var) / slope**2
    return AutocorrEstimate(probe=probe, lags=lags, estimates=estimates,
                            std_errors=std_errors, fit_window=window, tau0=tau0,
                            tau0_se=tau0_se, conditioned_replicas=kept)
