"""Local movements and O(L) incremental energy over chain caches.

A local movement at monomer index n (1-based, 2 <= n <= L-1) gives the
bond leaving monomer n a new angle pair, which moves monomers n+1 and
n+2 while everything else stays fixed: the new position of n+2 is solved
on the circle of points at unit distance from both the new n+1 and the
unchanged n+3, taking the point nearest the old position.  At n = L-1
only the last monomer moves; at n = L-2 there is no reconnect point and
the trailing bond rides along rigidly.

The Chain bundles positions with per-bend and per-pair energy caches so
evaluating a movement touches O(L) terms instead of the full pair table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionError, GeometryError
from .model import Conformation, Sequence, reported_energy


@dataclass(frozen=True)
class LocalMoveProposal:
    """Angle offsets for the bond leaving monomer n (1-based, 2..L-1).

    dbeta is ignored for n = 2, where the third monomer stays in the
    z = 0 plane.
    """

    n: int
    dtheta: float
    dbeta: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise DimensionError(f"move index must be >= 2, got {self.n}")
        if not (math.isfinite(self.dtheta) and math.isfinite(self.dbeta)):
            raise DimensionError("move offsets must be finite")


@dataclass(slots=True)
class MoveOutcome:
    """Result of proposing (and optionally evaluating) a local movement."""

    n: int
    feasible: bool
    status: int                      # kernel case/failure code
    theta_new: float                 # absolute pair actually applied
    beta_new: float
    coords: tuple = ()               # (x2x, x2y, x2z, x3x, x3y, x3z)
    delta_e1: float | None = None
    delta_e2: float | None = None
    new_energy: float | None = None
    _angout: np.ndarray | None = field(default=None, repr=False)
    _e1out: np.ndarray | None = field(default=None, repr=False)
    _prow1: np.ndarray | None = field(default=None, repr=False)
    _prow2: np.ndarray | None = field(default=None, repr=False)

    @property
    def x2(self) -> np.ndarray | None:
        """New position of monomer n+1."""
        return np.array(self.coords[:3]) if self.feasible else None

    @property
    def x3(self) -> np.ndarray | None:
        """New position of monomer n+2, when that monomer moves."""
        if not self.feasible or self.status == _kernels.MOVE_LAST:
            return None
        return np.array(self.coords[3:])

    @property
    def moved_indices(self) -> tuple[int, ...]:
        """0-based indices of the monomers this move displaces."""
        if not self.feasible:
            return ()
        if self.status == _kernels.MOVE_LAST:
            return (self.n,)
        return (self.n, self.n + 1)


class Chain:
    """Positions plus bend/pair energy caches for one conformation.

    Mutable and owned by a single optimizer run at a time; the packed
    angle vector x, positions and caches are kept mutually consistent by
    commit_move.
    """

    def __init__(self, seq: Sequence, conf: Conformation):
        if len(seq) != conf.length:
            raise DimensionError(
                f"sequence has {len(seq)} monomers but conformation has "
                f"{conf.length}")
        self.seq = seq
        self.cmat = seq.interaction_matrix()
        L = len(seq)
        self.x = conf.as_vector()
        self.positions = np.empty((L, 3), dtype=np.float64)
        self.e1cache = np.empty(L - 2, dtype=np.float64)
        self.e2cache = np.zeros((L, L), dtype=np.float64)
        # packed commit handoff reused by evaluate_move/try_move
        self._mvws = np.zeros(9 + 2 * L, dtype=np.float64)
        self._angout = self._mvws[0:6]
        self._e1out = self._mvws[6:9]
        self._prow1 = self._mvws[9:9 + L]
        self._prow2 = self._mvws[9 + L:]
        self._last_probe: tuple | None = None
        self.energy = float(_kernels.chain_build(
            self.x, self.cmat, self.positions, self.e1cache, self.e2cache))

    @property
    def length(self) -> int:
        return self.positions.shape[0]

    @property
    def conformation(self) -> Conformation:
        return Conformation.from_vector(self.x.copy())

    @property
    def reported_energy(self) -> float:
        return reported_energy(self.energy)

    def rebuild(self) -> float:
        """Recompute positions and caches from the angle vector."""
        self.energy = float(_kernels.chain_build(
            self.x, self.cmat, self.positions, self.e1cache, self.e2cache))
        return self.energy

    def incumbent_pair(self, n: int) -> tuple[float, float]:
        """Current (theta, beta) of the bond leaving monomer n; beta=0 at n=2."""
        L = self.length
        th = float(self.x[n - 2])
        be = float(self.x[L - 2 + n - 3]) if n >= 3 else 0.0
        return th, be

    def try_move(self, n: int, dtheta: float, dbeta: float = 0.0,
                 ) -> tuple[bool, float]:
        """Evaluate a movement without materializing an outcome object.

        Returns (feasible, new_energy); the handoff for commit_last_move
        is stashed on the chain, so at most the latest probe per chain is
        committable.
        """
        status, e_v, _d1, _d2, x2x, x2y, x2z, x3x, x3y, x3z = \
            _kernels.move_probe(self.x, self.positions, self.e1cache,
                                self.e2cache, self.cmat, self.energy,
                                n, dtheta, dbeta, self._mvws)
        if status < 0:
            self._last_probe = None
            return False, math.inf
        self._last_probe = (n, status, e_v, x2x, x2y, x2z, x3x, x3y, x3z)
        return True, e_v

    def commit_last_move(self) -> float:
        """Apply the move evaluated by the latest try_move; returns energy."""
        if self._last_probe is None:
            raise GeometryError("no feasible probe to commit")
        n, status, e_v, x2x, x2y, x2z, x3x, x3y, x3z = self._last_probe
        _kernels.move_commit(self.x, self.positions, self.e1cache,
                             self.e2cache, n, status,
                             x2x, x2y, x2z, x3x, x3y, x3z,
                             self._angout, self._e1out, self._prow1,
                             self._prow2)
        self.energy = e_v
        self._last_probe = None
        return e_v

    def dump_caches(self) -> str:
        """Text dump of the E1/E2 caches for oracle diffing."""
        lines = ["e1 " + " ".join(repr(v) for v in self.e1cache)]
        L = self.length
        for i in range(L - 2):
            row = " ".join(repr(self.e2cache[i, j]) for j in range(i + 2, L))
            lines.append(f"e2[{i}] {row}")
        return "\n".join(lines)


def _wrap(u: float) -> float:
    # same one-step wrap as the kernels, without a JIT dispatch
    if u <= -math.pi:
        u += 2.0 * math.pi
    if u > math.pi:
        u -= 2.0 * math.pi
    return u


def _proposal_pair(chain: Chain, proposal: LocalMoveProposal) -> tuple[float, float]:
    n = proposal.n
    if n > chain.length - 1:
        raise DimensionError(
            f"move index must be <= L-1 = {chain.length - 1}, got {n}")
    th_inc, be_inc = chain.incumbent_pair(n)
    th_new = _wrap(th_inc + proposal.dtheta)
    be_new = _wrap(be_inc + proposal.dbeta) if n >= 3 else 0.0
    return th_new, be_new


def move_geometry(chain: Chain, proposal: LocalMoveProposal) -> MoveOutcome:
    """Candidate positions for a proposal; no energy evaluation.

    The proposal offsets are added to the incumbent angle pair (a zero
    offset is the identity move) and wrapped into (-pi, pi].  Infeasible
    outcomes (reconnect gap over 2, or a degenerate nearest-point
    direction) come back with feasible=False and untouched positions.
    """
    n = proposal.n
    th_new, be_new = _proposal_pair(chain, proposal)
    status, x2x, x2y, x2z, x3x, x3y, x3z = _kernels.move_geometry(
        chain.positions, n, th_new, be_new)
    return MoveOutcome(n=n, feasible=status >= 0, status=int(status),
                       theta_new=th_new, beta_new=be_new,
                       coords=(x2x, x2y, x2z, x3x, x3y, x3z))


def delta_energy(chain: Chain, outcome: MoveOutcome) -> tuple[float, float, float]:
    """Incremental energy of a feasible move: (delta_e1, delta_e2, e_v).

    Deltas are old-minus-new sums of the unscaled cache terms; the new raw
    energy is e_old - (delta_e1/4 + 4*delta_e2).  Only pairs with a moved
    endpoint are touched.  The outcome is annotated in place for a later
    commit.
    """
    if not outcome.feasible:
        raise GeometryError("cannot evaluate an infeasible move")
    L = chain.length
    angout = np.empty(6, dtype=np.float64)
    e1out = np.empty(3, dtype=np.float64)
    prow1 = np.zeros(L, dtype=np.float64)
    prow2 = np.zeros(L, dtype=np.float64)
    c = outcome.coords
    e_v, d1, d2 = _kernels.move_delta(
        chain.x, chain.positions, chain.e1cache, chain.e2cache, chain.cmat,
        chain.energy, outcome.n, outcome.theta_new, outcome.beta_new,
        outcome.status, c[0], c[1], c[2], c[3], c[4], c[5],
        angout, e1out, prow1, prow2)
    outcome.delta_e1 = float(d1)
    outcome.delta_e2 = float(d2)
    outcome.new_energy = float(e_v)
    outcome._angout = angout
    outcome._e1out = e1out
    outcome._prow1 = prow1
    outcome._prow2 = prow2
    return float(d1), float(d2), float(e_v)


def evaluate_move(chain: Chain, proposal: LocalMoveProposal) -> MoveOutcome:
    """Geometry plus incremental energy in one step (the optimizer's path).

    Equivalent to move_geometry followed by delta_energy but with a single
    kernel dispatch and the chain's reusable scratch, so only the most
    recently evaluated outcome per chain is committable.
    """
    n = proposal.n
    th_new, be_new = _proposal_pair(chain, proposal)
    status, e_v, d1, d2, x2x, x2y, x2z, x3x, x3y, x3z = _kernels.move_eval(
        chain.x, chain.positions, chain.e1cache, chain.e2cache, chain.cmat,
        chain.energy, n, th_new, be_new, chain._mvws)
    if status < 0:
        return MoveOutcome(n=n, feasible=False, status=status,
                           theta_new=th_new, beta_new=be_new)
    return MoveOutcome(n=n, feasible=True, status=status,
                       theta_new=th_new, beta_new=be_new,
                       coords=(x2x, x2y, x2z, x3x, x3y, x3z),
                       delta_e1=d1, delta_e2=d2, new_energy=e_v,
                       _angout=chain._angout, _e1out=chain._e1out,
                       _prow1=chain._prow1, _prow2=chain._prow2)


def commit_move(chain: Chain, outcome: MoveOutcome) -> Chain:
    """Apply an evaluated move to the chain in place and return it.

    Moved positions, the affected angle window (re-derived from the new
    bond vectors for the solved bonds), the bend and pair caches and the
    cached energy are all updated; monomers outside the move keep
    bit-identical positions.
    """
    if not outcome.feasible:
        raise GeometryError("cannot commit an infeasible move")
    if outcome.new_energy is None:
        raise GeometryError("move must be evaluated before commit")
    c = outcome.coords
    _kernels.move_commit(
        chain.x, chain.positions, chain.e1cache, chain.e2cache,
        outcome.n, outcome.status, c[0], c[1], c[2], c[3], c[4], c[5],
        outcome._angout, outcome._e1out, outcome._prow1, outcome._prow2)
    chain.energy = outcome.new_energy
    return chain


def angles_from_positions(positions) -> Conformation:
    """Recover a conformation whose forward map reproduces the positions.

    Arbitrary rigid placements are first re-anchored (first monomer at the
    origin, first bond along +y, third monomer in the z = 0 plane) by a
    proper rotation; already-anchored inputs are read off directly, so
    forward-mapped positions round-trip without perturbation.  Torsions
    are recovered on the principal branch (asin, cos beta >= 0); the
    recovery is idempotent.
    """
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 3:
        raise GeometryError("positions must be an (L, 3) array with L >= 3")
    bonds = np.diff(pos, axis=0)
    norms = np.linalg.norm(bonds, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        worst = int(np.argmax(np.abs(norms - 1.0)))
        raise GeometryError(
            f"bond {worst} has length {norms[worst]:.9f}, expected 1")

    anchored = (np.all(np.abs(pos[0]) < 1e-9)
                and np.all(np.abs(pos[1] - (0.0, 1.0, 0.0)) < 1e-9)
                and abs(pos[2, 2]) < 1e-9)
    if not anchored:
        pos = pos - pos[0]
        # proper rotation taking the first bond onto +y
        u = pos[1] / np.linalg.norm(pos[1])
        y = np.array([0.0, 1.0, 0.0])
        v = np.cross(u, y)
        c = float(u @ y)
        if np.linalg.norm(v) < 1e-12:
            if c > 0.0:
                rot = np.eye(3)
            else:
                rot = np.diag([-1.0, -1.0, 1.0])  # pi turn about z
        else:
            vx = np.array([[0.0, -v[2], v[1]],
                           [v[2], 0.0, -v[0]],
                           [-v[1], v[0], 0.0]])
            rot = np.eye(3) + vx + vx @ vx / (1.0 + c)
        pos = pos @ rot.T
        # spin about +y to put the second bond in the z = 0 plane
        b1 = pos[2] - pos[1]
        if b1[0] * b1[0] + b1[2] * b1[2] > 1e-24:
            phi = math.atan2(b1[2], b1[0])
            cp, sp = math.cos(phi), math.sin(phi)
            spin = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
            pos = pos @ spin.T
        bonds = np.diff(pos, axis=0)

    theta = np.empty(pos.shape[0] - 2)
    beta = np.empty(pos.shape[0] - 3)
    theta[0] = math.atan2(bonds[1, 1], bonds[1, 0])
    for m in range(2, bonds.shape[0]):
        bx, by, bz = bonds[m]
        beta[m - 2] = math.asin(min(1.0, max(-1.0, bz)))
        if bx * bx + by * by < 1e-20:
            theta[m - 1] = 0.0
        else:
            theta[m - 1] = math.atan2(by, bx)
    return Conformation(theta, beta)
