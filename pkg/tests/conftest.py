"""Shared fixtures and the independent naive-energy oracle."""

import math

import numpy as np
import pytest

from abfold.model import Conformation, Sequence, interaction


def naive_positions(conf: Conformation) -> np.ndarray:
    """Position oracle: literal per-monomer recurrence, pure Python."""
    th, be = conf.theta, conf.beta
    pts = [(0.0, 0.0, 0.0), (0.0, 1.0, 0.0),
           (math.cos(th[0]), 1.0 + math.sin(th[0]), 0.0)]
    for i in range(3, len(th) + 2):
        t, b = th[i - 2], be[i - 3]
        x, y, z = pts[-1]
        pts.append((x + math.cos(t) * math.cos(b),
                    y + math.sin(t) * math.cos(b),
                    z + math.sin(b)))
    return np.array(pts)


def naive_energy(seq: Sequence, conf: Conformation) -> float:
    """Energy oracle: double loop over pairs with explicit distances."""
    pts = naive_positions(conf)
    bend = sum(1.0 - math.cos(t) for t in conf.theta) / 4.0
    pair = 0.0
    res = seq.residues
    for i in range(len(res)):
        for j in range(i + 2, len(res)):
            d = math.dist(pts[i], pts[j])
            if d < 1e-12:
                return math.inf
            pair += d ** -12 - interaction(res[i], res[j]) * d ** -6
    return bend + 4.0 * pair


def random_conformation(rng: np.random.Generator, length: int) -> Conformation:
    return Conformation(rng.uniform(-math.pi, math.pi, length - 2),
                        rng.uniform(-math.pi, math.pi, length - 3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
