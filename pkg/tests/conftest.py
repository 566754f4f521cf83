import numpy as np
import pytest
import scipy.sparse as sp

from scenrep.cflp import CflpInstance, GeneratorConfig, generate_instance
from scenrep.mip import MipProblem


@pytest.fixture(scope="session")
def tiny_cflp() -> CflpInstance:
    """Two locations, two scenarios; small enough for joint enumeration."""
    return CflpInstance(
        n=2,
        c_f=np.array([16.0, 18.0]),
        c_v=np.array([6.0, 5.0]),
        c_tf=np.array([[5.0, 7.0], [9.0, 6.0]]),
        c_tv=np.array([[1.0, 3.0], [4.0, 2.0]]),
        demand=np.array([[4.0, 7.0], [6.0, 3.0]]),
        seed=1,
    )


@pytest.fixture(scope="session")
def zero_demand_cflp() -> CflpInstance:
    return CflpInstance(
        n=3,
        c_f=np.array([17.0, 15.0, 19.0]),
        c_v=np.array([6.0, 8.0, 5.0]),
        c_tf=np.full((3, 3), 6.0),
        c_tv=np.full((3, 3), 2.0),
        demand=np.zeros((2, 3)),
        seed=2,
    )


@pytest.fixture(scope="session")
def desk_instance() -> CflpInstance:
    return generate_instance(GeneratorConfig(n=3, m=4), seed=11)


def random_binary_mip(rng, n_max=12, m_max=10) -> MipProblem:
    """A random pure-binary minimization MIP with <= n_max vars, m_max rows."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    c = rng.uniform(-10, 10, size=n).round(3)
    A = rng.uniform(-5, 10, size=(m, n)).round(3)
    b = (A.clip(min=0).sum(axis=1) * rng.uniform(0.2, 0.9, size=m)).round(3)
    return MipProblem(c=c, A=sp.csr_matrix(A), senses=np.full(m, "L"), rhs=b,
                      lo=np.zeros(n), hi=np.ones(n),
                      is_integer=np.ones(n, dtype=bool))
