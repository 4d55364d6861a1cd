"""Self-adaptive DE/best/1/bin with local movements and two-tier restarts.

One run evolves a population of angle vectors: each generation builds a
best/1/bin trial per individual with jDE-sampled control parameters, adds
a halved second trial when the first improves (temporal locality), then
walks a local-movement pass over the best population member using the
incremental energy caches.  When the population best stagnates for
pb*D evaluations the population is restarted: usually as copies of the
local best with c components redrawn, escalating to a full random restart
after lb*D restarts without local-best improvement.

Raw energies are minimized internally; RunRecord carries the negated
reported value.  Runs are deterministic per seed under evaluation-limit
and target stopping.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import ConfigError, DimensionError
from .model import Conformation, Sequence, reported_energy

_TRACE_CAP = 1 << 15


def default_params(d: int) -> tuple[int, int, int]:
    """Restart schedule (pb, lb, c) by problem dimension."""
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    return (50, 10, 5) if d < 45 else (25, 5, 10)


@dataclass(frozen=True)
class OptimizerConfig:
    """Run settings; pb/lb/c default to the dimension schedule.

    At least one stopping criterion (nse_limit, time_limit, target) is
    required.  target is a reported (negated) energy; the run stops as
    soon as the global best reaches it.  Ablations: local_search off is
    the crossover-only variant, component_reinit off makes every restart
    a full random restart, temporal_locality off skips the second trial.
    """

    np_size: int = 20
    pb: int | None = None
    lb: int | None = None
    c: int | None = None
    seed: int = 0
    nse_limit: int | None = None
    time_limit: float | None = None
    target: float | None = None
    local_search: bool = True
    component_reinit: bool = True
    temporal_locality: bool = True
    move_mode: str = "offset"      # or "absolute": raw angles, not offsets
    trace: bool = False

    def validate(self, dimension: int) -> "OptimizerConfig":
        """Fill schedule defaults and check bounds against a problem size."""
        if self.np_size < 4:
            raise ConfigError(f"population size must be >= 4, got {self.np_size}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.nse_limit is None and self.time_limit is None and self.target is None:
            raise ConfigError("need a stopping criterion: nse_limit, "
                              "time_limit or target")
        if self.nse_limit is not None and self.nse_limit < 0:
            raise ConfigError("nse_limit must be >= 0")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ConfigError("time_limit must be positive")
        if self.move_mode not in ("offset", "absolute"):
            raise ConfigError(f"unknown move_mode {self.move_mode!r}")
        pb, lb, c = default_params(dimension)
        cfg = replace(self,
                      pb=self.pb if self.pb is not None else pb,
                      lb=self.lb if self.lb is not None else lb,
                      c=self.c if self.c is not None else c)
        if cfg.pb <= 0 or cfg.lb <= 0 or cfg.c <= 0:
            raise ConfigError("pb, lb and c must be positive")
        if cfg.c > dimension:
            raise ConfigError(f"c = {cfg.c} exceeds dimension {dimension}")
        return cfg


@dataclass
class Individual:
    """One population member: angles, control parameters, cached energy."""

    x: Conformation
    f: float
    cr: float
    e: float


@dataclass
class RunRecord:
    """Outcome of one optimizer run (energies in reported convention)."""

    label: str
    seed: int
    energy: float
    nse: int
    time_s: float
    speed: float
    hit: bool | None
    conformation: Conformation | None = None
    trace: list[tuple[int, float, float]] | None = None
    stop_reason: str = ""

    def record_dict(self) -> dict:
        """Line-record fields (no conformation payload)."""
        return {"label": self.label, "seed": self.seed, "E": self.energy,
                "NSE": self.nse, "t": self.time_s, "v": self.speed,
                "hit": self.hit}


class OptimizerState:
    """All arrays one run mutates, shared by the jitted loop and the
    Python-level operations (which exist for testing and composition)."""

    def __init__(self, seq: Sequence, config: OptimizerConfig):
        config = config.validate(seq.dimension)
        self.seq = seq
        self.config = config
        self.cmat = seq.interaction_matrix()
        L = len(seq)
        D = seq.dimension
        n = config.np_size
        self.pop_x = np.empty((n, D))
        self.pop_f = np.empty(n)
        self.pop_cr = np.empty(n)
        self.pop_e = np.empty(n)
        self.bl_x = np.empty(D)
        self.bg_x = np.empty(D)
        self.pos = np.empty((L, 3))
        self.e1 = np.empty(L - 2)
        self.e2 = np.zeros((L, L))
        self.pos_ws = np.empty((L, 3))
        self.trial_u = np.empty(D)
        self.trial_us = np.empty(D)
        self.prow1 = np.zeros(L)
        self.prow2 = np.zeros(L)
        self.angout = np.empty(6)
        self.e1out = np.empty(3)
        self.rng = _kernels.seed_rng(config.seed)
        self.counters = np.zeros(8, dtype=np.int64)
        self.floats = np.zeros(4)
        self.trace_buf = np.empty((_TRACE_CAP, 2))

    # -- bookkeeping views ------------------------------------------------
    @property
    def nse(self) -> int:
        return int(self.counters[_kernels.C_NSE])

    @property
    def best_index(self) -> int:
        return int(self.counters[_kernels.C_BEST_IDX])

    @property
    def best_pop(self) -> Individual:
        b = self.best_index
        return Individual(Conformation.from_vector(self.pop_x[b].copy()),
                          float(self.pop_f[b]), float(self.pop_cr[b]),
                          float(self.pop_e[b]))

    @property
    def best_local_energy(self) -> float:
        return float(self.floats[_kernels.F_LOCAL_E])

    @property
    def best_global_energy(self) -> float:
        return float(self.floats[_kernels.F_GLOBAL_E])

    @property
    def best_global(self) -> Conformation:
        return Conformation.from_vector(self.bg_x.copy())

    def population(self) -> list[Individual]:
        return [Individual(Conformation.from_vector(self.pop_x[i].copy()),
                           float(self.pop_f[i]), float(self.pop_cr[i]),
                           float(self.pop_e[i]))
                for i in range(self.config.np_size)]

    def _flags(self) -> tuple[int, int, int, int]:
        c = self.config
        return (1 if c.local_search else 0,
                1 if c.component_reinit else 0,
                1 if c.temporal_locality else 0,
                1 if c.move_mode == "absolute" else 0)

    def _stop_args(self) -> tuple[int, int, float]:
        c = self.config
        nse_limit = c.nse_limit if c.nse_limit is not None else -1
        has_target = 1 if c.target is not None else 0
        target_raw = -c.target if c.target is not None else 0.0
        return nse_limit, has_target, target_raw


# --------------------------------------------------------------------------
# operations (thin Python frontends over the same kernels the loop uses)

def wrap_angle(u: float) -> float:
    """One wrap step into (-pi, pi]; valid for |u| < 3*pi."""
    return float(_kernels.wrap_angle(u))


def init_population(seq: Sequence, config: OptimizerConfig) -> OptimizerState:
    """Uniform random population in [-pi, pi]^D with F=0.5, Cr=0.9.

    Evaluates every member (np_size evaluations) and points all three
    best records at the population best.
    """
    state = OptimizerState(seq, config)
    trace_on = 1 if state.config.trace else 0
    _kernels.init_population(state.pop_x, state.pop_f, state.pop_cr,
                             state.pop_e, state.cmat, state.pos_ws,
                             state.rng, state.counters, state.floats,
                             state.bl_x, state.bg_x, state.trace_buf, trace_on)
    return state


def jde_sample(f_i: float, cr_i: float, rng: np.ndarray) -> tuple[float, float]:
    """Control parameters for one trial: regenerate each with prob 0.1.

    F is redrawn on [0.1, 1.0), Cr on [0, 1); otherwise the individual's
    values are inherited.  The pair is written back to the individual only
    when its trial survives selection.
    """
    f = 0.1 + 0.9 * _kernels.rand_u(rng) if _kernels.rand_u(rng) < 0.1 else f_i
    cr = _kernels.rand_u(rng) if _kernels.rand_u(rng) < 0.1 else cr_i
    return float(f), float(cr)


def mutate_crossover(state: OptimizerState, i: int, f: float, cr: float) -> np.ndarray:
    """best/1/bin trial vector for individual i with wrapped components.

    The base is the best population member; r1, r2 are distinct from each
    other and from i; j_rand forces at least one mutated component.
    """
    rng = state.rng
    n, D = state.pop_x.shape
    r1 = i
    while r1 == i:
        r1 = int(_kernels.rand_u(rng) * n)
    r2 = i
    while r2 == i or r2 == r1:
        r2 = int(_kernels.rand_u(rng) * n)
    jrand = int(_kernels.rand_u(rng) * D)
    b = state.best_index
    trial = np.empty(D)
    for j in range(D):
        if _kernels.rand_u(rng) < cr or j == jrand:
            trial[j] = _kernels.wrap_angle(
                state.pop_x[b, j] + f * (state.pop_x[r1, j] - state.pop_x[r2, j]))
        else:
            trial[j] = state.pop_x[i, j]
    return trial


def temporal_locality(state: OptimizerState, i: int, trial: np.ndarray,
                      trial_energy: float, f: float, cr: float) -> float:
    """Second-trial selection for an improving trial (one extra evaluation).

    u* halves the accepted step from the best population member; the
    better of u and u* replaces individual i, which adopts (f, cr).
    Returns the energy written to the slot.
    """
    b = state.best_index
    D = state.pop_x.shape[1]
    u_star = np.empty(D)
    for j in range(D):
        u_star[j] = _kernels.wrap_angle(
            state.pop_x[b, j] + 0.5 * (trial[j] - state.pop_x[i, j]))
    e_star = float(_kernels.energy_packed(u_star, state.cmat, state.pos_ws))
    state.counters[_kernels.C_NSE] += 1
    state.counters[_kernels.C_STAG] += 1
    if e_star < state.floats[_kernels.F_GLOBAL_E]:
        state.floats[_kernels.F_GLOBAL_E] = e_star
        state.bg_x[:] = u_star
    if e_star <= trial_energy:
        chosen, e = u_star, e_star
    else:
        chosen, e = trial, trial_energy
    state.pop_x[i] = chosen
    state.pop_e[i] = e
    state.pop_f[i] = f
    state.pop_cr[i] = cr
    if i == b:
        state.counters[_kernels.C_DIRTY] = 1
    if e < state.floats[_kernels.F_POP_MIN]:
        state.floats[_kernels.F_POP_MIN] = e
        state.counters[_kernels.C_STAG] = 0
    return e


def local_search(state: OptimizerState, i: int) -> None:
    """Local-movement pass over the best population slot.

    For each monomer n = 2..L-1 an offset pair is drawn from the scaled
    difference between the best member and individual i, the movement is
    evaluated incrementally (one evaluation, feasible or not) and
    committed when it does not worsen the slot.
    """
    rng = state.rng
    L = len(state.seq)
    b = state.best_index
    if not math.isfinite(state.pop_e[b]):
        return
    if state.counters[_kernels.C_DIRTY] == 1:
        state.pop_e[b] = _kernels.chain_build(
            state.pop_x[b], state.cmat, state.pos, state.e1, state.e2)
        state.counters[_kernels.C_DIRTY] = 0
    absolute = 1 if state.config.move_mode == "absolute" else 0
    for n in range(2, L):
        rr1 = _kernels.rand_u(rng)
        rr2 = _kernels.rand_u(rng)
        dth = rr1 * (state.pop_x[b, n - 2] - state.pop_x[i, n - 2])
        bj = n + L - 5
        dbe = rr2 * (state.pop_x[b, bj] - state.pop_x[i, bj])
        if absolute:
            th_new = _kernels.wrap_angle(dth)
            be_new = _kernels.wrap_angle(dbe) if n >= 3 else 0.0
        else:
            th_new = _kernels.wrap_angle(state.pop_x[b, n - 2] + dth)
            if n >= 3:
                be_new = _kernels.wrap_angle(state.pop_x[b, L - 2 + n - 3] + dbe)
            else:
                be_new = 0.0
        status, x2x, x2y, x2z, x3x, x3y, x3z = _kernels.move_geometry(
            state.pos, n, th_new, be_new)
        state.counters[_kernels.C_NSE] += 1
        state.counters[_kernels.C_STAG] += 1
        if status < 0:
            continue
        e_v, _d1, _d2 = _kernels.move_delta(
            state.pop_x[b], state.pos, state.e1, state.e2, state.cmat,
            state.pop_e[b], n, th_new, be_new, status,
            x2x, x2y, x2z, x3x, x3y, x3z,
            state.angout, state.e1out, state.prow1, state.prow2)
        if e_v <= state.pop_e[b]:
            _kernels.move_commit(state.pop_x[b], state.pos, state.e1, state.e2,
                                 n, status, x2x, x2y, x2z, x3x, x3y, x3z,
                                 state.angout, state.e1out, state.prow1,
                                 state.prow2)
            state.pop_e[b] = e_v
            if e_v < state.floats[_kernels.F_POP_MIN]:
                state.floats[_kernels.F_POP_MIN] = e_v
                state.counters[_kernels.C_STAG] = 0
            if e_v < state.floats[_kernels.F_GLOBAL_E]:
                state.floats[_kernels.F_GLOBAL_E] = e_v
                state.bg_x[:] = state.pop_x[b]


def reinitialize(state: OptimizerState) -> str:
    """Generation-end restart check; returns 'none', 'component' or 'random'.

    Fires when the population best has stagnated for pb*D evaluations:
    the local best absorbs it when not worse, then either every member
    becomes the local best with c components redrawn, or (after lb*D
    restarts without local-best improvement, or with component restarts
    ablated) the whole population is redrawn uniformly.
    """
    cfg = state.config
    D = state.pop_x.shape[1]
    n = cfg.np_size
    rng = state.rng
    K = _kernels
    if state.counters[K.C_STAG] < cfg.pb * D:
        return "none"
    nb = state.best_index
    improved = False
    if state.pop_e[nb] <= state.floats[K.F_LOCAL_E]:
        if state.pop_e[nb] < state.floats[K.F_LOCAL_E]:
            improved = True
        state.floats[K.F_LOCAL_E] = state.pop_e[nb]
        state.bl_x[:] = state.pop_x[nb]
    state.counters[K.C_REINITS] = 0 if improved else state.counters[K.C_REINITS] + 1
    if not cfg.component_reinit or state.counters[K.C_REINITS] >= cfg.lb * D:
        kind = "random"
        for ii in range(n):
            for j in range(D):
                state.pop_x[ii, j] = -math.pi + 2.0 * math.pi * K.rand_u(rng)
            state.pop_f[ii] = 0.5
            state.pop_cr[ii] = 0.9
            state.pop_e[ii] = K.energy_packed(state.pop_x[ii], state.cmat,
                                              state.pos_ws)
            state.counters[K.C_NSE] += 1
        nb = int(np.argmin(state.pop_e))
        state.counters[K.C_BEST_IDX] = nb
        state.floats[K.F_LOCAL_E] = state.pop_e[nb]
        state.bl_x[:] = state.pop_x[nb]
        state.counters[K.C_REINITS] = 0
    else:
        kind = "component"
        for ii in range(n):
            state.pop_x[ii] = state.bl_x
            chosen: list[int] = []
            for _k in range(cfg.c):
                idx = int(K.rand_u(rng) * D)
                while idx in chosen:
                    idx = int(K.rand_u(rng) * D)
                chosen.append(idx)
                state.pop_x[ii, idx] = -math.pi + 2.0 * math.pi * K.rand_u(rng)
            state.pop_e[ii] = K.energy_packed(state.pop_x[ii], state.cmat,
                                              state.pos_ws)
            state.counters[K.C_NSE] += 1
        nb = int(np.argmin(state.pop_e))
        state.counters[K.C_BEST_IDX] = nb
    state.floats[K.F_POP_MIN] = state.pop_e[nb]
    state.counters[K.C_STAG] = 0
    state.counters[K.C_DIRTY] = 1
    return kind


# --------------------------------------------------------------------------
# full run

def run(seq: Sequence, config: OptimizerConfig) -> RunRecord:
    """Optimize until a stopping criterion fires and return the outcome.

    Deterministic per seed under evaluation-limit and target stopping;
    wall time is checked once per generation when a time limit is set.
    The evaluation counter includes initialization, both trials, every
    local-movement proposal (feasible or not) and restart re-evaluations,
    so it can overshoot an exact limit by at most one inner batch.
    """
    t0 = time.perf_counter()
    state = init_population(seq, config)
    cfg = state.config
    ls_on, cr_on, tl_on, absolute = state._flags()
    nse_limit, has_target, target_raw = state._stop_args()
    trace_on = 1 if cfg.trace else 0
    trace: list[tuple[int, float, float]] = []
    last_nse = 0
    last_t = time.perf_counter() - t0

    def drain_trace():
        nonlocal last_nse, last_t
        now = time.perf_counter() - t0
        cnt = int(state.counters[_kernels.C_TRACE])
        if cnt:
            span_nse = max(1, state.nse - last_nse)
            for k in range(cnt):
                rec_nse = int(state.trace_buf[k, 0])
                frac = min(1.0, max(0.0, (rec_nse - last_nse) / span_nse))
                elapsed = last_t + frac * (now - last_t)
                trace.append((rec_nse, elapsed,
                              reported_energy(state.trace_buf[k, 1])))
            state.counters[_kernels.C_TRACE] = 0
        last_nse = state.nse
        last_t = now

    stop_reason = ""
    # honor the degenerate budget before running any generation
    if nse_limit >= 0 and state.nse >= nse_limit:
        stop_reason = "nse_limit"
    if has_target and state.best_global_energy <= target_raw:
        stop_reason = "target"
    gens_per_chunk = 1 if cfg.time_limit is not None else 512
    while not stop_reason:
        if cfg.time_limit is not None and time.perf_counter() - t0 >= cfg.time_limit:
            stop_reason = "time_limit"
            break
        code = _kernels.run_chunk(
            state.pop_x, state.pop_f, state.pop_cr, state.pop_e,
            state.bl_x, state.bg_x, state.cmat,
            state.pos, state.e1, state.e2, state.pos_ws,
            state.trial_u, state.trial_us, state.prow1, state.prow2,
            state.angout, state.e1out, state.rng, state.counters,
            state.floats, state.trace_buf,
            gens_per_chunk, cfg.pb, cfg.lb, cfg.c,
            nse_limit, has_target, target_raw,
            ls_on, cr_on, tl_on, trace_on, absolute)
        drain_trace()
        if code == _kernels.STOP_NSE:
            stop_reason = "nse_limit"
        elif code == _kernels.STOP_TARGET:
            stop_reason = "target"
    drain_trace()
    elapsed = time.perf_counter() - t0
    best = state.best_global
    e_rep = reported_energy(state.best_global_energy)
    hit = None if cfg.target is None else bool(e_rep >= cfg.target)
    return RunRecord(label=seq.label, seed=cfg.seed, energy=e_rep,
                     nse=state.nse, time_s=elapsed,
                     speed=state.nse / elapsed if elapsed > 0 else float("inf"),
                     hit=hit, conformation=best,
                     trace=trace if cfg.trace else None,
                     stop_reason=stop_reason)
