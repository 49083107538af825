import numpy as np
import pytest

from kinetic_rknn.cone_geometry import build_cone_family
from kinetic_rknn.trajectories import Trajectory


@pytest.fixture(scope="session")
def family2():
    return build_cone_family(2)


@pytest.fixture(scope="session")
def family3():
    return build_cone_family(3)


def random_points(rng, n, d):
    return rng.uniform(-1.0, 1.0, size=(n, d))


def random_trajectories(rng, n, d, s):
    return [Trajectory.make(i, rng.uniform(-1.0, 1.0, size=(d, s + 1))) for i in range(n)]


def wedge_scan_first_k(family, l, positions, apex, k):
    """Definitional wedge membership scan, sorted by (axis coordinate, id)."""
    u = family.u_coords_many(l, positions)
    x = family.axis_coords_many(l, positions)
    ua = family.u_coords_many(l, np.asarray(apex, dtype=float)[None, :])[0]
    members = [q for q in range(len(positions)) if np.all(u[q] >= ua)]
    members.sort(key=lambda q: (x[q], q))
    return members[:k]
