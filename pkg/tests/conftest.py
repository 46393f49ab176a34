import numpy as np
import pytest

from parhybrid.methods import ParamsA, ParamsB, ParamsMann
from parhybrid.problems import Section5Problem, build_section5

# The single-operator instance used for hand-checked iterations.
TINY = Section5Problem(1, 1, 1, (0.5,), (2.0,), (0.5,), (0.25,))


def k_synthetic(n):
    return 1.0 + 1.0 / (n + 1) ** 2


@pytest.fixture
def tiny():
    return build_section5(TINY)


@pytest.fixture
def default_problem():
    return build_section5()


def params_a(**kw):
    base = dict(a=0.2, b=0.2, d=1.0, alpha_cap=0.5)
    base.update(kw)
    return ParamsA(0.2, 0.5, 1.0, **base)


def params_b(N, w0=0.5, **kw):
    row = np.concatenate([[w0], np.full(N, (1.0 - w0) / N)])
    base = dict(a=0.2, b=0.2, d=1.0, weight_floor=w0 * (1.0 - w0) / N)
    base.update(kw)
    return ParamsB(lambda n: row, 0.2, 1.0, **base)


def params_mann(alpha=lambda n: 1.0 / (n + 2), lam=0.25):
    return ParamsMann(lam, alpha, a=lam, b=lam)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
