import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pseudobosons.models import build_model, generate_family
from pseudobosons.polygauss import CPoly, GaussEnvelope, PolyGaussFun, PolyGaussTerm
from pseudobosons.verify import CANONICAL, random_probe
from pseudobosons.weyl import WeylOp

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def bundles():
    return {m: build_model(m, **p) for m, p in CANONICAL.items()}


@pytest.fixture(scope="session")
def families(bundles):
    return {m: generate_family(b, 8) for m, b in bundles.items()}


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def probe_from_seed(seed, degree=3):
    return random_probe(np.random.default_rng(seed), 2, degree)


probes = seeds.map(probe_from_seed)


def random_weyl(rng, degree=3, n=2):
    terms = {}
    for alpha in np.ndindex(*([degree + 1] * n)):
        for beta in np.ndindex(*([degree + 1] * n)):
            if sum(alpha) + sum(beta) <= degree and rng.random() < 0.4:
                terms[(alpha, beta)] = complex(rng.normal(), rng.normal())
    return WeylOp(n, terms)


weyl_ops = seeds.map(lambda s: random_weyl(np.random.default_rng(s)))

scalars = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def gauss(M, v=None, s=0j, poly=None):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[0]
    v = np.zeros(n) if v is None else v
    return PolyGaussFun(n, [PolyGaussTerm(poly if poly is not None else CPoly.one(n), GaussEnvelope(M, v, s))])
