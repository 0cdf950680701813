import numpy as np
import pytest

from elastic_floquet import BackgroundMedium, Circle, Lattice, ResonatorGeometry


@pytest.fixture(scope="session")
def medium():
    return BackgroundMedium(1.0, 1.0)


@pytest.fixture(scope="session")
def square():
    return Lattice.square()


@pytest.fixture(scope="session")
def two_disks(square):
    return ResonatorGeometry([Circle((0.3, 0.3), 0.2), Circle((0.7, 0.68), 0.15)], square)


@pytest.fixture(scope="session")
def one_disk(square):
    return ResonatorGeometry([Circle((0.5, 0.5), 0.2)], square)


def hermitian_pattern(rng, n, scale=1.0):
    """Random matrix with ``C = C^H`` (the conjugation symmetry of capacitance data)."""
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (A + A.conj().T) / 2
