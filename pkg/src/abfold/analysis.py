"""Conformation comparison: superposed RMSD, mirror symmetry, clustering.

The RMSD minimizes over proper rigid motions only (rotation determinant
+1, plus translation), so a chiral chain and its reflection register as
distinct -- that distinction is what separates the two mirror-image
best-known structures.  Mirroring negates every torsion angle, which
reflects the chain through the XY plane and preserves the energy exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DimensionError
from .model import (Conformation, Sequence, compute_positions, get_sequence,
                    parse_angles)

DEFAULT_CLUSTER_THRESHOLD = 0.1

# reported (negated) best energies of the published solution archive
BEST_KNOWN_ENERGY = {
    "1BXP": 5.6104, "1CB3": 8.4589, "1BXL": 17.3962, "1EDP": 15.0092,
    "2ZNF": 18.3402, "1EDN": 21.4703, "2H3S": 21.1519, "1ARE": 25.2800,
    "2KGU": 52.7165, "1TZ4": 43.0229, "1TZ5": 49.3868, "1AGT": 65.1990,
    "1CRN": 92.9853, "2KAP": 85.5099, "1HVV": 95.4475, "1GK4": 106.4193,
    "1PCH": 156.5252, "2EWH": 245.5193,
    "F13": 6.9961, "F21": 16.5544, "F34": 31.3459, "F55": 52.0558,
    "F89": 83.5761,
}


def superposed_rmsd(a, b) -> float:
    """Minimum RMSD between two point sets over proper rigid motions.

    Centroids are subtracted, the optimal rotation comes from the SVD of
    the correlation matrix with the smallest singular direction flipped
    when the raw solution would be a reflection.
    """
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    if pa.shape != pb.shape or pa.ndim != 2 or pa.shape[1] != 3:
        raise DimensionError(
            f"point sets must share an (L, 3) shape, got {pa.shape} vs {pb.shape}")
    pa = pa - pa.mean(axis=0)
    pb = pb - pb.mean(axis=0)
    u, s, vt = np.linalg.svd(pa.T @ pb)
    d = np.sign(np.linalg.det(u @ vt))
    flip = np.array([1.0, 1.0, d])
    rot = (u * flip) @ vt
    diff = pa @ rot - pb
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=1))))


def conformation_rmsd(a: Conformation, b: Conformation) -> float:
    return superposed_rmsd(compute_positions(a), compute_positions(b))


def mirror(conf: Conformation) -> Conformation:
    """XY-plane reflection: bond angles kept, every torsion negated."""
    return Conformation(conf.theta.copy(), -conf.beta)


@dataclass(frozen=True)
class ArchiveEntry:
    """One archived solution: label, conformation, reported energy, source."""

    label: str
    conformation: Conformation
    energy: float
    source: str = ""


@dataclass(frozen=True)
class Cluster:
    members: tuple[int, ...]
    best_energy: float
    representative: int


def cluster_solutions(entries: list[ArchiveEntry],
                      rmsd_threshold: float = DEFAULT_CLUSTER_THRESHOLD,
                      ) -> list[Cluster]:
    """Single-linkage clusters under the superposed RMSD.

    All entries must describe the same sequence.  Clusters come back
    sorted by best (highest reported) energy, each naming its best member.
    """
    if not entries:
        return []
    lengths = {e.conformation.length for e in entries}
    if len(lengths) != 1:
        raise DimensionError(f"entries mix chain lengths {sorted(lengths)}")
    n = len(entries)
    pos = [compute_positions(e.conformation) for e in entries]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if superposed_rmsd(pos[i], pos[j]) <= rmsd_threshold:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for members in groups.values():
        best = max(members, key=lambda k: entries[k].energy)
        clusters.append(Cluster(tuple(members), entries[best].energy, best))
    clusters.sort(key=lambda c: -c.best_energy)
    return clusters


class SolutionArchive:
    """Published best-known solutions, loadable per sequence label."""

    def __init__(self, entries: list[ArchiveEntry]):
        self.entries = entries

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> list[str]:
        seen = []
        for e in self.entries:
            if e.label not in seen:
                seen.append(e.label)
        return seen

    def for_label(self, label: str) -> list[ArchiveEntry]:
        return [e for e in self.entries if e.label == label]


def load_best_known() -> SolutionArchive:
    """The bundled archive of published best conformations (degrees on disk).

    Short sequences carry both mirror variants; energies come from the
    published best-energy table.
    """
    text = resources.files("abfold.data").joinpath("best_solutions.txt") \
        .read_text(encoding="utf-8")
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    entries = []
    for k in range(0, len(lines), 2):
        label = lines[k]
        conf = Conformation.from_degrees(parse_angles(lines[k + 1]))
        seq = get_sequence(label)
        if conf.dimension != seq.dimension:
            raise DimensionError(
                f"archive {label}: {conf.dimension} angles vs D={seq.dimension}")
        entries.append(ArchiveEntry(label=label, conformation=conf,
                                    energy=BEST_KNOWN_ENERGY[label],
                                    source="published-best"))
    return SolutionArchive(entries)
