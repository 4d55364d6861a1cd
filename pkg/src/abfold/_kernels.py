"""JIT-compiled kernels: chain geometry, energy, local movements, DE loop.

Angle vectors are packed as x[0:L-2] = bond angles (theta) and
x[L-2:2L-5] = torsion angles (beta), radians in [-pi, pi].  Monomer and
cache indices below are 0-based; the move index ``n`` keeps the 1-based
monomer convention of the optimizer (2 <= n <= L-1, monomers n+1 and n+2
move) so the two layers read the same way.

Everything on the hot path mutates caller-owned arrays and allocates
nothing.  The evaluation counter and stopping checks live in the loop
kernels; a single energy evaluation or move proposal costs exactly one
count.
"""

import math

import numpy as np
from numba import njit

# Relaxed float ops for the arithmetic-heavy kernels, but keep strict
# inf/nan semantics: clash sentinels are +inf and must compare normally.
_FM = {"reassoc", "contract", "arcp", "nsz"}

CLASH_D2 = 1e-24  # squared-distance floor; below this the 12-6 term blows up

TWO_PI = 2.0 * math.pi

# stop codes returned by run_chunk
CONTINUE = 0
STOP_NSE = 1
STOP_TARGET = 2
TRACE_FULL = 3

# counters[] slots
C_NSE = 0
C_BEST_IDX = 1
C_STAG = 2          # evaluations since best-pop strictly improved / last restart
C_REINITS = 3       # consecutive reinit events without local-best improvement
C_GENS = 4
C_DIRTY = 5         # best-pop chain caches stale
C_TRACE = 6

# floats[] slots
F_LOCAL_E = 0
F_GLOBAL_E = 1
F_POP_MIN = 2       # tracked minimum raw energy in the current population


# --------------------------------------------------------------------------
# xoshiro256** generator, seeded through splitmix64.  State is uint64[4].

@njit(cache=True)
def seed_rng(seed):
    state = np.empty(4, np.uint64)
    z = np.uint64(seed)
    for i in range(4):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        t = z
        t = (t ^ (t >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        t = (t ^ (t >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        state[i] = t ^ (t >> np.uint64(31))
    return state


@njit(cache=True)
def rand_u(state):
    """Uniform float64 in [0, 1) consuming one generator step."""
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    r = s1 * np.uint64(5)
    r = ((r << np.uint64(7)) | (r >> np.uint64(57))) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return (r >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def wrap_angle(u):
    """One wrap step into (-pi, pi]; sufficient for |u| < 3*pi."""
    if u <= -math.pi:
        u += TWO_PI
    if u > math.pi:
        u -= TWO_PI
    return u


# --------------------------------------------------------------------------
# geometry and energy

@njit(cache=True, fastmath=_FM)
def fill_positions(x, pos):
    """Unit-bond chain positions from a packed angle vector (anchored frame)."""
    L = pos.shape[0]
    pos[0, 0] = 0.0
    pos[0, 1] = 0.0
    pos[0, 2] = 0.0
    pos[1, 0] = 0.0
    pos[1, 1] = 1.0
    pos[1, 2] = 0.0
    t = x[0]
    pos[2, 0] = math.cos(t)
    pos[2, 1] = 1.0 + math.sin(t)
    pos[2, 2] = 0.0
    for i in range(3, L):
        th = x[i - 2]
        be = x[L - 2 + i - 3]
        cb = math.cos(be)
        pos[i, 0] = pos[i - 1, 0] + math.cos(th) * cb
        pos[i, 1] = pos[i - 1, 1] + math.sin(th) * cb
        pos[i, 2] = pos[i - 1, 2] + math.sin(be)


@njit(cache=True, fastmath=_FM)
def energy_packed(x, cmat, pos):
    """Raw energy of a packed angle vector; +inf when two monomers clash.

    ``pos`` is an (L, 3) workspace, overwritten.  The pair term uses
    squared distances only: d^-6 = (d^2)^-3, d^-12 = ((d^2)^-3)^2.
    """
    L = cmat.shape[0]
    fill_positions(x, pos)
    e1 = 0.0
    for k in range(L - 2):
        e1 += 1.0 - math.cos(x[k])
    e2 = 0.0
    for i in range(L - 2):
        xi = pos[i, 0]
        yi = pos[i, 1]
        zi = pos[i, 2]
        for j in range(i + 2, L):
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            dz = zi - pos[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < CLASH_D2:
                return np.inf
            inv6 = 1.0 / (d2 * d2 * d2)
            e2 += inv6 * inv6 - cmat[i, j] * inv6
    return 0.25 * e1 + 4.0 * e2


@njit(cache=True, fastmath=_FM)
def chain_build(x, cmat, pos, e1, e2):
    """Fill position/bend/pair caches for x and return the raw energy.

    e1[k] holds the unscaled bend term 1 - cos(theta_k); e2 is a full
    symmetric table of unscaled pair terms with the |i-j| <= 1 band unused.
    """
    L = cmat.shape[0]
    fill_positions(x, pos)
    s1 = 0.0
    for k in range(L - 2):
        v = 1.0 - math.cos(x[k])
        e1[k] = v
        s1 += v
    s2 = 0.0
    for i in range(L - 2):
        xi = pos[i, 0]
        yi = pos[i, 1]
        zi = pos[i, 2]
        for j in range(i + 2, L):
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            dz = zi - pos[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < CLASH_D2:
                term = np.inf
            else:
                inv6 = 1.0 / (d2 * d2 * d2)
                term = inv6 * inv6 - cmat[i, j] * inv6
            e2[i, j] = term
            e2[j, i] = term
            s2 += term
    return 0.25 * s1 + 4.0 * s2


# --------------------------------------------------------------------------
# local movement (move index n is 1-based: monomers n+1, n+2 move)

# move_geometry status codes
MOVE_PAIR = 0       # general two-monomer move reconnecting at p_{n+3}
MOVE_LAST = 1       # n = L-1: only the last monomer moves
MOVE_TAIL = 2       # n = L-2: last two monomers move, trailing bond rides along
INFEASIBLE_GAP = -1      # ||P4 - X2|| > 2: the two unit bonds cannot reconnect
INFEASIBLE_DEGENERATE = -2  # no unique nearest point on the reconnect circle


@njit(cache=True)
def move_geometry(pos, n, th_new, be_new):
    """Candidate positions for the move at n given the absolute angle pair.

    Returns (status, x2x, x2y, x2z, x3x, x3y, x3z).  X2 is the new position
    of monomer n+1, placed from monomer n along the (th_new, be_new)
    direction (be_new is ignored for n = 2, where the z offset is fixed at
    zero).  X3 is the new position of monomer n+2: the point at unit
    distance from both X2 and the fixed p_{n+3} nearest to the old
    position, built from the chord midpoint, the circle radius
    sqrt(1 - |P4-X2|^2/4), and the projection residual.
    """
    L = pos.shape[0]
    a = n - 1  # 0-based index of monomer n
    if n == 2:
        dx = math.cos(th_new)
        dy = math.sin(th_new)
        dz = 0.0
    else:
        cb = math.cos(be_new)
        dx = math.cos(th_new) * cb
        dy = math.sin(th_new) * cb
        dz = math.sin(be_new)
    x2x = pos[a, 0] + dx
    x2y = pos[a, 1] + dy
    x2z = pos[a, 2] + dz
    if n == L - 1:
        return MOVE_LAST, x2x, x2y, x2z, 0.0, 0.0, 0.0
    if n == L - 2:
        # no reconnect point: the trailing bond keeps its direction
        m1 = n
        m2 = n + 1
        x3x = x2x + (pos[m2, 0] - pos[m1, 0])
        x3y = x2y + (pos[m2, 1] - pos[m1, 1])
        x3z = x2z + (pos[m2, 2] - pos[m1, 2])
        return MOVE_TAIL, x2x, x2y, x2z, x3x, x3y, x3z
    p4 = n + 2
    wx = pos[p4, 0] - x2x
    wy = pos[p4, 1] - x2y
    wz = pos[p4, 2] - x2z
    w2 = wx * wx + wy * wy + wz * wz
    if w2 > 4.0:
        return INFEASIBLE_GAP, x2x, x2y, x2z, 0.0, 0.0, 0.0
    if w2 < 1e-24:
        return INFEASIBLE_DEGENERATE, x2x, x2y, x2z, 0.0, 0.0, 0.0
    cx = x2x + 0.5 * wx
    cy = x2y + 0.5 * wy
    cz = x2z + 0.5 * wz
    ell = math.sqrt(1.0 - 0.25 * w2)
    rx = pos[n + 1, 0] - cx
    ry = pos[n + 1, 1] - cy
    rz = pos[n + 1, 2] - cz
    wn = math.sqrt(w2)
    ux = wx / wn
    uy = wy / wn
    uz = wz / wn
    dot = rx * ux + ry * uy + rz * uz
    px = rx - dot * ux
    py = ry - dot * uy
    pz = rz - dot * uz
    pn = math.sqrt(px * px + py * py + pz * pz)
    if pn < 1e-12:
        # collapsed reconnect circle (|P4 - X2| = 2) still has the unique
        # solution X3 = C; otherwise the nearest point is undefined
        if ell < 1e-9:
            return MOVE_PAIR, x2x, x2y, x2z, cx, cy, cz
        return INFEASIBLE_DEGENERATE, x2x, x2y, x2z, 0.0, 0.0, 0.0
    s = ell / pn
    return MOVE_PAIR, x2x, x2y, x2z, cx + px * s, cy + py * s, cz + pz * s


@njit(cache=True)
def derive_bond_angles(vx, vy, vz, th_old, be_old):
    """Angle pair reproducing a unit bond vector.

    Two representations exist ((t, b) and (t+pi, pi-b) wrapped); the bend
    potential tells them apart, so pick the branch whose torsion is nearest
    the incumbent value.  Vertical bonds (cos beta = 0) leave theta free;
    the incumbent theta is kept.
    """
    if vz > 1.0:
        vz = 1.0
    elif vz < -1.0:
        vz = -1.0
    b0 = math.asin(vz)
    if vx * vx + vy * vy < 1e-20:
        return th_old, b0
    t0 = math.atan2(vy, vx)
    b1 = math.pi - b0
    if b1 > math.pi:
        b1 -= TWO_PI
    t1 = t0 + math.pi
    if t1 > math.pi:
        t1 -= TWO_PI
    if abs(wrap_angle(b0 - be_old)) <= abs(wrap_angle(b1 - be_old)):
        return t0, b0
    return t1, b1


@njit(cache=True, fastmath=_FM)
def move_delta(x, pos, e1, e2, cmat, e_old, n, th_new, be_new, status,
               x2x, x2y, x2z, x3x, x3y, x3z, angout, e1out, prow1, prow2):
    """Incremental energy of a feasible move: touches O(L) pair terms.

    Returns (e_v, delta_e1, delta_e2) with deltas as old-minus-new sums of
    the unscaled cache terms, e_v = e_old - (delta_e1/4 + 4*delta_e2).
    Fills the commit handoff: angout = new angle pairs for the three
    affected bonds, e1out = their new bend terms, prow1/prow2 = new pair
    terms indexed by partner.  Returns +inf on a clash.
    """
    L = cmat.shape[0]
    d1 = 0.0
    angout[0] = th_new
    angout[1] = be_new
    angout[2] = np.nan
    angout[3] = np.nan
    angout[4] = np.nan
    angout[5] = np.nan
    v = 1.0 - math.cos(th_new)
    e1out[0] = v
    e1out[1] = np.nan
    e1out[2] = np.nan
    d1 += e1[n - 2] - v
    if status == MOVE_PAIR:
        # bond n (X2 -> X3) and bond n+1 (X3 -> p_{n+3}) get re-derived angles
        td, bd = derive_bond_angles(x3x - x2x, x3y - x2y, x3z - x2z,
                                    x[n - 1], x[L - 2 + n - 2])
        angout[2] = td
        angout[3] = bd
        v = 1.0 - math.cos(td)
        e1out[1] = v
        d1 += e1[n - 1] - v
        p4 = n + 2
        td, bd = derive_bond_angles(pos[p4, 0] - x3x, pos[p4, 1] - x3y,
                                    pos[p4, 2] - x3z, x[n], x[L - 2 + n - 1])
        angout[4] = td
        angout[5] = bd
        v = 1.0 - math.cos(td)
        e1out[2] = v
        d1 += e1[n] - v
    # pair terms: every pair with a moved endpoint (|i - j| >= 2 only)
    d2s = 0.0
    m1 = n
    for o in range(L):
        if m1 - 1 <= o <= m1 + 1:
            continue
        dx = x2x - pos[o, 0]
        dy = x2y - pos[o, 1]
        dz = x2z - pos[o, 2]
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < CLASH_D2:
            return np.inf, 0.0, 0.0
        inv6 = 1.0 / (d2 * d2 * d2)
        term = inv6 * inv6 - cmat[m1, o] * inv6
        prow1[o] = term
        d2s += e2[m1, o] - term
    if status != MOVE_LAST:
        m2 = n + 1
        for o in range(L):
            if m2 - 1 <= o <= m2 + 1:
                continue
            dx = x3x - pos[o, 0]
            dy = x3y - pos[o, 1]
            dz = x3z - pos[o, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < CLASH_D2:
                return np.inf, 0.0, 0.0
            inv6 = 1.0 / (d2 * d2 * d2)
            term = inv6 * inv6 - cmat[m2, o] * inv6
            prow2[o] = term
            d2s += e2[m2, o] - term
    return e_old - (0.25 * d1 + 4.0 * d2s), d1, d2s


@njit(cache=True)
def move_eval(x, pos, e1, e2, cmat, e_old, n, th_new, be_new, ws):
    """Fused geometry + incremental energy for one proposal.

    ws is the packed commit handoff: ws[0:6] angle pairs, ws[6:9] bend
    terms, ws[9:9+L] and ws[9+L:9+2L] pair rows.  Returns
    (status, e_v, d1, d2, x2x, x2y, x2z, x3x, x3y, x3z); e_v is
    meaningful only when status >= 0.
    """
    status, x2x, x2y, x2z, x3x, x3y, x3z = move_geometry(pos, n, th_new, be_new)
    if status < 0:
        return status, 0.0, 0.0, 0.0, x2x, x2y, x2z, x3x, x3y, x3z
    L = pos.shape[0]
    e_v, d1, d2 = move_delta(x, pos, e1, e2, cmat, e_old, n, th_new, be_new,
                             status, x2x, x2y, x2z, x3x, x3y, x3z,
                             ws[0:6], ws[6:9], ws[9:9 + L], ws[9 + L:9 + 2 * L])
    return status, e_v, d1, d2, x2x, x2y, x2z, x3x, x3y, x3z


@njit(cache=True)
def move_probe(x, pos, e1, e2, cmat, e_old, n, dtheta, dbeta, ws):
    """Offset-mode proposal in one dispatch: wrap, geometry, delta.

    Adds the offsets to the incumbent pair of bond n, wraps, then runs
    move_eval.  Returns the same tuple as move_eval.
    """
    L = pos.shape[0]
    th = wrap_angle(x[n - 2] + dtheta)
    if n >= 3:
        be = wrap_angle(x[L - 2 + n - 3] + dbeta)
    else:
        be = 0.0
    return move_eval(x, pos, e1, e2, cmat, e_old, n, th, be, ws)


@njit(cache=True)
def move_commit(x, pos, e1, e2, n, status,
                x2x, x2y, x2z, x3x, x3y, x3z, angout, e1out, prow1, prow2):
    """Apply an evaluated move: positions, angle window, caches, in place."""
    L = pos.shape[0]
    m1 = n
    pos[m1, 0] = x2x
    pos[m1, 1] = x2y
    pos[m1, 2] = x2z
    x[n - 2] = angout[0]
    if n >= 3:
        x[L - 2 + n - 3] = angout[1]
    e1[n - 2] = e1out[0]
    if status != MOVE_LAST:
        m2 = n + 1
        pos[m2, 0] = x3x
        pos[m2, 1] = x3y
        pos[m2, 2] = x3z
        if status == MOVE_PAIR:
            x[n - 1] = angout[2]
            x[L - 2 + n - 2] = angout[3]
            e1[n - 1] = e1out[1]
            x[n] = angout[4]
            x[L - 2 + n - 1] = angout[5]
            e1[n] = e1out[2]
        # MOVE_TAIL: trailing bond translated rigidly, its angles unchanged
        for o in range(L):
            if o < m2 - 1 or o > m2 + 1:
                e2[m2, o] = prow2[o]
                e2[o, m2] = prow2[o]
    for o in range(L):
        if o < m1 - 1 or o > m1 + 1:
            e2[m1, o] = prow1[o]
            e2[o, m1] = prow1[o]


# --------------------------------------------------------------------------
# optimizer loop

@njit(cache=True)
def _argmin(pop_e):
    b = 0
    for i in range(1, pop_e.shape[0]):
        if pop_e[i] < pop_e[b]:
            b = i
    return b


@njit(cache=True)
def _trace_add(trace, counters, nse, raw):
    if counters[C_TRACE] < trace.shape[0]:
        trace[counters[C_TRACE], 0] = nse
        trace[counters[C_TRACE], 1] = raw
        counters[C_TRACE] += 1


@njit(cache=True)
def init_population(pop_x, pop_f, pop_cr, pop_e, cmat, pos_ws,
                    rng, counters, floats, bl_x, bg_x, trace, trace_on):
    """Uniform random population, F=0.5/Cr=0.9, all three bests = BEST(P)."""
    np_size, D = pop_x.shape
    for i in range(np_size):
        for j in range(D):
            pop_x[i, j] = -math.pi + TWO_PI * rand_u(rng)
        pop_f[i] = 0.5
        pop_cr[i] = 0.9
        pop_e[i] = energy_packed(pop_x[i], cmat, pos_ws)
        counters[C_NSE] += 1
    b = _argmin(pop_e)
    counters[C_BEST_IDX] = b
    counters[C_STAG] = 0
    counters[C_DIRTY] = 1
    floats[F_LOCAL_E] = pop_e[b]
    floats[F_GLOBAL_E] = pop_e[b]
    floats[F_POP_MIN] = pop_e[b]
    for j in range(D):
        bl_x[j] = pop_x[b, j]
        bg_x[j] = pop_x[b, j]
    if trace_on == 1:
        _trace_add(trace, counters, counters[C_NSE], pop_e[b])


@njit(cache=True)
def run_chunk(pop_x, pop_f, pop_cr, pop_e, bl_x, bg_x, cmat,
              pos, e1, e2, pos_ws, trial_u, trial_us, prow1, prow2,
              angout, e1out, rng, counters, floats, trace,
              max_gens, pb, lb, c_comp, nse_limit, has_target, target_raw,
              ls_on, cr_on, tl_on, trace_on, absolute_move):
    """Run up to max_gens generations; stop early on NSE limit or target.

    One generation = jDE-sampled best/1/bin trial per individual, the
    halved second trial on improvement, the per-monomer local-movement
    pass over the best population slot, then the two-tier restart check.
    """
    np_size, D = pop_x.shape
    L = cmat.shape[0]
    for _g in range(max_gens):
        if trace_on == 1 and counters[C_TRACE] + np_size * (L + 1) + 4 > trace.shape[0]:
            return TRACE_FULL
        for i in range(np_size):
            # self-adaptive control parameters: regenerate with prob 0.1
            if rand_u(rng) < 0.1:
                f = 0.1 + 0.9 * rand_u(rng)
            else:
                f = pop_f[i]
            if rand_u(rng) < 0.1:
                cr = rand_u(rng)
            else:
                cr = pop_cr[i]
            r1 = i
            while r1 == i:
                r1 = int(rand_u(rng) * np_size)
            r2 = i
            while r2 == i or r2 == r1:
                r2 = int(rand_u(rng) * np_size)
            jrand = int(rand_u(rng) * D)
            b = counters[C_BEST_IDX]
            for j in range(D):
                if rand_u(rng) < cr or j == jrand:
                    uj = pop_x[b, j] + f * (pop_x[r1, j] - pop_x[r2, j])
                    if uj <= -math.pi:
                        uj += TWO_PI
                    if uj > math.pi:
                        uj -= TWO_PI
                else:
                    uj = pop_x[i, j]
                trial_u[j] = uj
            e_u = energy_packed(trial_u, cmat, pos_ws)
            counters[C_NSE] += 1
            counters[C_STAG] += 1
            if e_u < floats[F_GLOBAL_E]:
                floats[F_GLOBAL_E] = e_u
                for j in range(D):
                    bg_x[j] = trial_u[j]
                if trace_on == 1:
                    _trace_add(trace, counters, counters[C_NSE], e_u)
            if nse_limit >= 0 and counters[C_NSE] >= nse_limit:
                return STOP_NSE
            if has_target == 1 and floats[F_GLOBAL_E] <= target_raw:
                return STOP_TARGET
            if e_u <= pop_e[i]:
                acc_e = e_u
                if tl_on == 1:
                    # second trial: halve the accepted step from the best
                    for j in range(D):
                        usj = pop_x[b, j] + 0.5 * (trial_u[j] - pop_x[i, j])
                        if usj <= -math.pi:
                            usj += TWO_PI
                        if usj > math.pi:
                            usj -= TWO_PI
                        trial_us[j] = usj
                    e_us = energy_packed(trial_us, cmat, pos_ws)
                    counters[C_NSE] += 1
                    counters[C_STAG] += 1
                    if e_us < floats[F_GLOBAL_E]:
                        floats[F_GLOBAL_E] = e_us
                        for j in range(D):
                            bg_x[j] = trial_us[j]
                        if trace_on == 1:
                            _trace_add(trace, counters, counters[C_NSE], e_us)
                    if e_us <= e_u:
                        for j in range(D):
                            pop_x[i, j] = trial_us[j]
                        acc_e = e_us
                    else:
                        for j in range(D):
                            pop_x[i, j] = trial_u[j]
                else:
                    for j in range(D):
                        pop_x[i, j] = trial_u[j]
                pop_e[i] = acc_e
                pop_f[i] = f
                pop_cr[i] = cr
                if i == b:
                    counters[C_DIRTY] = 1
                if acc_e < floats[F_POP_MIN]:
                    floats[F_POP_MIN] = acc_e
                    counters[C_STAG] = 0
                if tl_on == 1:
                    if nse_limit >= 0 and counters[C_NSE] >= nse_limit:
                        return STOP_NSE
                    if has_target == 1 and floats[F_GLOBAL_E] <= target_raw:
                        return STOP_TARGET
                if ls_on == 1 and np.isfinite(pop_e[b]):
                    if counters[C_DIRTY] == 1:
                        pop_e[b] = chain_build(pop_x[b], cmat, pos, e1, e2)
                        counters[C_DIRTY] = 0
                    for n in range(2, L):
                        rr1 = rand_u(rng)
                        rr2 = rand_u(rng)
                        dth = rr1 * (pop_x[b, n - 2] - pop_x[i, n - 2])
                        # for n = 2 this reads the last theta component and
                        # the result is ignored by the movement
                        bj = n + L - 5
                        dbe = rr2 * (pop_x[b, bj] - pop_x[i, bj])
                        if absolute_move == 1:
                            th_new = wrap_angle(dth)
                            be_new = wrap_angle(dbe) if n >= 3 else 0.0
                        else:
                            th_new = wrap_angle(pop_x[b, n - 2] + dth)
                            if n >= 3:
                                be_new = wrap_angle(pop_x[b, L - 2 + n - 3] + dbe)
                            else:
                                be_new = 0.0
                        status, x2x, x2y, x2z, x3x, x3y, x3z = \
                            move_geometry(pos, n, th_new, be_new)
                        counters[C_NSE] += 1
                        counters[C_STAG] += 1
                        if status >= 0:
                            e_v, _d1, _d2 = move_delta(
                                pop_x[b], pos, e1, e2, cmat, pop_e[b],
                                n, th_new, be_new, status,
                                x2x, x2y, x2z, x3x, x3y, x3z,
                                angout, e1out, prow1, prow2)
                            if e_v <= pop_e[b]:
                                move_commit(pop_x[b], pos, e1, e2, n, status,
                                            x2x, x2y, x2z, x3x, x3y, x3z,
                                            angout, e1out, prow1, prow2)
                                pop_e[b] = e_v
                                if e_v < floats[F_POP_MIN]:
                                    floats[F_POP_MIN] = e_v
                                    counters[C_STAG] = 0
                                if e_v < floats[F_GLOBAL_E]:
                                    floats[F_GLOBAL_E] = e_v
                                    for j in range(D):
                                        bg_x[j] = pop_x[b, j]
                                    if trace_on == 1:
                                        _trace_add(trace, counters,
                                                   counters[C_NSE], e_v)
                        if nse_limit >= 0 and counters[C_NSE] >= nse_limit:
                            return STOP_NSE
                        if has_target == 1 and floats[F_GLOBAL_E] <= target_raw:
                            return STOP_TARGET
        # generation end: rebind the best population slot
        nb = _argmin(pop_e)
        if nb != counters[C_BEST_IDX]:
            counters[C_BEST_IDX] = nb
            counters[C_DIRTY] = 1
        floats[F_POP_MIN] = pop_e[nb]
        if pop_e[nb] <= floats[F_GLOBAL_E]:
            if pop_e[nb] < floats[F_GLOBAL_E]:
                floats[F_GLOBAL_E] = pop_e[nb]
                if trace_on == 1:
                    _trace_add(trace, counters, counters[C_NSE], pop_e[nb])
            for j in range(D):
                bg_x[j] = pop_x[nb, j]
        # two-tier reinitialization
        if counters[C_STAG] >= pb * D:
            improved = False
            if pop_e[nb] <= floats[F_LOCAL_E]:
                if pop_e[nb] < floats[F_LOCAL_E]:
                    improved = True
                floats[F_LOCAL_E] = pop_e[nb]
                for j in range(D):
                    bl_x[j] = pop_x[nb, j]
            if improved:
                counters[C_REINITS] = 0
            else:
                counters[C_REINITS] += 1
            if cr_on == 0 or counters[C_REINITS] >= lb * D:
                # full random restart
                for ii in range(np_size):
                    for j in range(D):
                        pop_x[ii, j] = -math.pi + TWO_PI * rand_u(rng)
                    pop_f[ii] = 0.5
                    pop_cr[ii] = 0.9
                    pop_e[ii] = energy_packed(pop_x[ii], cmat, pos_ws)
                    counters[C_NSE] += 1
                nb = _argmin(pop_e)
                counters[C_BEST_IDX] = nb
                floats[F_LOCAL_E] = pop_e[nb]
                for j in range(D):
                    bl_x[j] = pop_x[nb, j]
                counters[C_REINITS] = 0
            else:
                # component restart: local best with c_comp components redrawn
                chosen = np.empty(c_comp, np.int64)
                for ii in range(np_size):
                    for j in range(D):
                        pop_x[ii, j] = bl_x[j]
                    for k in range(c_comp):
                        while True:
                            idx = int(rand_u(rng) * D)
                            dup = False
                            for q in range(k):
                                if chosen[q] == idx:
                                    dup = True
                                    break
                            if not dup:
                                break
                        chosen[k] = idx
                        pop_x[ii, idx] = -math.pi + TWO_PI * rand_u(rng)
                    pop_e[ii] = energy_packed(pop_x[ii], cmat, pos_ws)
                    counters[C_NSE] += 1
                nb = _argmin(pop_e)
                counters[C_BEST_IDX] = nb
            floats[F_POP_MIN] = pop_e[nb]
            counters[C_STAG] = 0
            counters[C_DIRTY] = 1
            if nse_limit >= 0 and counters[C_NSE] >= nse_limit:
                return STOP_NSE
        counters[C_GENS] += 1
    return CONTINUE
