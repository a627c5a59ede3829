import numpy as np
import pytest
from scipy.optimize import linprog

from discpool.instance import PoolingInstance, generate_instance

TINY = (3, 2, 2, 1)


def scipy_lp(model):
    """Independent LP optimum via HiGHS: (status, objective)."""
    names, c, A, senses, b, lb, ub = model.dense()
    sign = -1.0 if model.sense == "max" else 1.0
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, s, v in zip(A, senses, b):
        if s == "<=":
            A_ub.append(row)
            b_ub.append(v)
        elif s == ">=":
            A_ub.append(-row)
            b_ub.append(-v)
        else:
            A_eq.append(row)
            b_eq.append(v)
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi) for lo, hi in zip(lb, ub)]
    res = linprog(
        sign * c,
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=b_ub or None,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=b_eq or None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return "infeasible", None
    if res.status == 3:
        return "unbounded", None
    assert res.status == 0, res.message
    return "optimal", sign * res.fun


def single_path(alpha=1.0, beta=2.0, gamma=10.0, upsilon=10.0, omega=10.0, pi=None, psi=None):
    """1 stream, 1 pool, 1 product; optional single property."""
    props = ["l1"] if pi is not None else []
    return PoolingInstance(
        streams=["i1"], pools=["j1"], products=["k1"], properties=props,
        alpha=[alpha], beta=[beta], gamma=[gamma], upsilon=[[upsilon]],
        pi=[[pi]] if pi is not None else [[]], psi=[[psi]] if psi is not None else [[]],
        omega=[omega],
    )


def one_pool_two_products(upsilon=(3.0, 3.0), gamma=10.0, sigma=8.0):
    return PoolingInstance(
        streams=["i1"], pools=["j1"], products=["k1", "k2"], properties=["l1"],
        alpha=[1.0], beta=[3.0, 2.5], gamma=[gamma], upsilon=[list(upsilon)],
        pi=[[1.0]], psi=[[1.5], [2.0]], omega=[20.0, 20.0], sigma=[[sigma]], name="fork",
    )


@pytest.fixture(scope="session")
def tiny_instances():
    return [generate_instance(TINY, seed) for seed in range(1, 11)]


_CRITERIA: dict = {}


def record_criterion(n, line):
    _CRITERIA[n] = line


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])
