"""Event-driven Monte Carlo of the mining race.

Each cycle starts at (0,0) and ends at the next entry into (0,0); cycles are
i.i.d., so the long-run profit is estimated by the regenerative ratio
estimator and its error bar comes from the cycle-level CLT.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import transitions
from .model import ModelParams, Policy, ValidationError, enumerate_states

CHUNK = 1 << 16


class UnderSampleError(RuntimeError):
    """The run ended before a single regeneration cycle completed."""


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_cycles: int | None = None
    horizon: float | None = None
    accounting: str = "lump"  # or "rate": accrue f(state) continuously
    track_states: bool = False

    def __post_init__(self):
        if (self.n_cycles is None) == (self.horizon is None):
            raise ValidationError("give exactly one of n_cycles or horizon")
        if self.n_cycles is not None and self.n_cycles < 1:
            raise ValidationError("n_cycles must be ≥ 1")
        if self.horizon is not None and not self.horizon > 0:
            raise ValidationError("horizon must be > 0")
        if self.accounting not in ("lump", "rate"):
            raise ValidationError("accounting must be 'lump' or 'rate'")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")

    @property
    def mode(self) -> str:
        return "cycles" if self.n_cycles is not None else "horizon"


@dataclass
class StateStats:
    time: np.ndarray  # total time spent in each state
    exits: np.ndarray  # number of departures from each state
    occupancy: np.ndarray  # time fraction
    occupancy_se: np.ndarray


@dataclass
class SimEstimate:
    eta_hat: float
    std_err: float
    n_events: int
    n_cycles: int
    total_time: float
    seed: int
    accounting: str
    cycle_stats: dict[str, float]
    states: StateStats | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "eta_hat": self.eta_hat,
            "std_err": self.std_err,
            "n_events": self.n_events,
            "n_cycles": self.n_cycles,
            "total_time": self.total_time,
            "seed": self.seed,
            "accounting": self.accounting,
            "cycle_stats": dict(self.cycle_stats),
        }


def _uniform_chunks(seed: int):
    rng = np.random.Generator(np.random.Philox(seed))
    while True:
        yield rng.random(CHUNK).tolist()


def _tables(params: ModelParams, policy: Policy):
    space = enumerate_states(params.m)
    policy.check(space)
    exit_rate, cum, dest, lump, f_R = [], [], [], [], []
    for s, region in zip(space.states, space.regions):
        moves = [t for t in transitions(s, region, policy.value(s, region), params) if t.rate > 0]
        total = math.fsum(t.rate for t in moves)
        c = np.cumsum([t.rate / total for t in moves]).tolist()
        c[-1] = 1.0
        exit_rate.append(total)
        cum.append(c)
        dest.append([space.index(t.dest) for t in moves])
        lump.append([t.lump for t in moves])
        # reward rate per unit of R for continuous accrual
        f_R.append(math.fsum(t.lump * t.rate for t in moves))
    return space, exit_rate, cum, dest, lump, f_R


def simulate(params: ModelParams, policy: Policy | float, config: SimConfig) -> SimEstimate:
    if not isinstance(policy, Policy):
        policy = Policy.scalar(policy)
    space, exit_rate, cum, dest, lump, f_R = _tables(params, policy)
    n = len(space)
    root = space.index((0, 0))
    chunks = _uniform_chunks(config.seed)
    buf = next(chunks)
    pos = 0
    log = math.log
    bisect_right = bisect.bisect_right
    use_rate = config.accounting == "rate"
    track = config.track_states

    target = config.n_cycles if config.n_cycles is not None else math.inf
    horizon = config.horizon if config.horizon is not None else math.inf

    lengths: list[float] = []
    rewards: list[float] = []  # per-cycle reward in units of R
    n_events = 0
    clock = 0.0
    state_time = [0.0] * n
    state_exits = [0] * n
    occ_s1 = [0.0] * n
    occ_s2 = [0.0] * n
    occ_st = [0.0] * n
    cyc_occ = [0.0] * n
    in_cycle = [False] * n
    touched: list[int] = []

    s = root
    t_cyc = 0.0
    y_cyc = 0.0
    done = False
    while not done:
        if pos + 2 > CHUNK:
            buf = next(chunks)
            pos = 0
        u1 = buf[pos]
        u2 = buf[pos + 1]
        pos += 2
        hold = -log(1.0 - u1) / exit_rate[s]
        if clock + hold > horizon:
            break
        k = bisect_right(cum[s], u2)
        if k == len(cum[s]):
            k -= 1
        nxt = dest[s][k]
        clock += hold
        t_cyc += hold
        n_events += 1
        if use_rate:
            y_cyc += f_R[s] * hold
        else:
            y_cyc += lump[s][k]
        if track:
            if not in_cycle[s]:
                in_cycle[s] = True
                touched.append(s)
            cyc_occ[s] += hold
            state_time[s] += hold
            state_exits[s] += 1
        s = nxt
        if s == root:
            lengths.append(t_cyc)
            rewards.append(y_cyc)
            if track:
                for j in touched:
                    v = cyc_occ[j]
                    occ_s1[j] += v
                    occ_s2[j] += v * v
                    occ_st[j] += v * t_cyc
                    cyc_occ[j] = 0.0
                    in_cycle[j] = False
                touched.clear()
            t_cyc = 0.0
            y_cyc = 0.0
            if len(lengths) >= target:
                done = True

    n_cyc = len(lengths)
    if n_cyc == 0:
        raise UnderSampleError(f"horizon {config.horizon} too short: no regeneration cycle completed")

    tau = np.asarray(lengths)
    y = np.asarray(rewards)
    R, C = params.R, params.C
    total_time = float(tau.sum())
    ratio = float(y.sum()) / total_time
    eta_hat = R * ratio - C
    if n_cyc > 1:
        resid = y - ratio * tau
        se_ratio = math.sqrt(float(resid @ resid) / (n_cyc - 1) / n_cyc) / float(tau.mean())
    else:
        se_ratio = math.inf if R != 0 else 0.0
    std_err = R * se_ratio if R != 0 else 0.0

    cycle_reward = R * y - C * tau
    stats = {
        "mean_length": float(tau.mean()),
        "var_length": float(tau.var(ddof=1)) if n_cyc > 1 else 0.0,
        "mean_reward": float(cycle_reward.mean()),
        "var_reward": float(cycle_reward.var(ddof=1)) if n_cyc > 1 else 0.0,
    }

    states = None
    if track:
        st_time = np.asarray(state_time)
        s1, s2, s_t = np.asarray(occ_s1), np.asarray(occ_s2), np.asarray(occ_st)
        tau2 = float(tau @ tau)
        occ = s1 / total_time
        # ratio-estimator variance: sum_i (T_si - occ tau_i)^2, expanded
        ss = s2 - 2 * occ * s_t + occ**2 * tau2
        occ_se = np.sqrt(np.maximum(ss, 0.0) / max(n_cyc - 1, 1) / n_cyc) / float(tau.mean())
        states = StateStats(st_time, np.asarray(state_exits), occ, occ_se)

    return SimEstimate(eta_hat, std_err, n_events, n_cyc, total_time, int(config.seed),
                       config.accounting, stats, states)
