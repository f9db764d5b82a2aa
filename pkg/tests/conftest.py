import numpy as np
import pytest

from levy_extrema.levy import (
    BrownianDrift,
    CompoundPoissonMixedGamma,
    CosechSquaredJumps,
    GeneralizedHyperbolic,
    MixedGammaJumps,
    StoppingTime,
)


def cauchy_bump(x):
    return 1.0 / (1.0 + x * x)


MODELS = {
    "brownian": BrownianDrift(mu=0.3, sigma=1.2),
    "compound_poisson": CompoundPoissonMixedGamma(
        mu=0.5, sigma=0.3, intensity=2.0,
        jumps=MixedGammaJumps(((0.5, 1, 2.0),), ((0.3, 2, 1.0), (0.2, 1, 3.0))),
    ),
    "cosech_squared": CosechSquaredJumps(mu=2.0, sigma=2.0, alpha=0.0),
    "cosech_tilted": CosechSquaredJumps(mu=0.5, sigma=1.0, alpha=0.3),
    "generalized_hyperbolic": GeneralizedHyperbolic(mu=2.0, lam=-1.0, alpha=2.0, beta=1.0, delta=3.0),
}

STOPS = {
    "exp5": StoppingTime("exponential", 5.0),
    "exp1": StoppingTime("exponential", 1.0),
    "geo": StoppingTime("geometric", 0.7),
}


@pytest.fixture(params=sorted(MODELS))
def model(request):
    return MODELS[request.param]


@pytest.fixture(params=sorted(STOPS))
def stop(request):
    return STOPS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def emit(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({detail})"
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
