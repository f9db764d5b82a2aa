import math

import numpy as np
import pytest

from levy_extrema.levy import BrownianDrift, CosechSquaredJumps, StoppingTime, stopped_cf
from levy_extrema.pipeline import STAGES, PipelineError, PipelineOptions, run_pipeline
from levy_extrema.transforms import make_grid

from conftest import MODELS, STOPS

GH_PUBLISHED = (4.280110446j, 2.340695867j, 0.4442175550j, -0.9399774855j, -2.318278971j, -3.713000684j,
                -5.121014155j, -6.538310520j, -7.962083725j, -9.390493630j)

# (model, stopping, options) for which the pipeline is expected to run on every supported family
CASES = {
    "brownian-exp5": ("brownian", "exp5", PipelineOptions(count=2)),
    "brownian-geo": ("brownian", "geo", PipelineOptions(count=2)),
    "compound_poisson-exp1": ("compound_poisson", "exp1", PipelineOptions(count=6)),
    "compound_poisson-geo": ("compound_poisson", "geo", PipelineOptions(count=3)),
    "cosech-exp5": ("cosech_squared", "exp5", PipelineOptions(count={"upper": 2, "lower": 1})),
    "cosech-exp1-6": ("cosech_squared", "exp1", PipelineOptions(count=6)),
    "cosech_tilted-geo": ("cosech_tilted", "geo", PipelineOptions(count=3)),
    "gh-exp5-published": ("generalized_hyperbolic", "exp5", PipelineOptions(kind="D*", poles=GH_PUBLISHED)),
}


@pytest.fixture(scope="module", params=sorted(CASES))
def result(request):
    m, s, opts = CASES[request.param]
    return run_pipeline(MODELS[m], STOPS[s], opts)


def test_factor_product_reconstructs_approximant(result):
    w = make_grid(20.0, 2**10)
    up, lo = result.factors
    c = result.rescale[0] * result.rescale[1]
    assert np.allclose(up(w) * lo(w), c * result.approximant(w), rtol=1e-8, atol=1e-12)


def test_densities_nonnegative_and_normalized(result):
    for d in (result.supremum, result.infimum):
        x = d.support_window(2001)
        assert np.all(d.pdf(x) >= -1e-12)
        assert 0.0 <= d.atom <= 1.0
        assert d.total_mass() == pytest.approx(1.0, abs=1e-8)
    assert result.supremum.side == "supremum" and result.infimum.side == "infimum"


def test_factors_normalized_at_origin(result):
    for f in result.factors:
        assert abs(f(0.0) - 1.0) < 1e-10


def test_fit_error_and_bound_consistent(result):
    from levy_extrema.whf import error_bound_factorization
    assert result.fit_error >= 0
    assert result.bound == pytest.approx(error_bound_factorization(result.fit_error, result.order))


def test_brownian_is_exact():
    res = run_pipeline(BrownianDrift(mu=0.0, sigma=math.sqrt(2.0)), StoppingTime("exponential", 1.0), PipelineOptions(count=2))
    assert res.fit_error < 1e-12
    (c, lam, d), = res.supremum.terms
    assert abs(c - 1) < 1e-10 and abs(lam - 1) < 1e-10 and d == 0
    (c, lam, d), = res.infimum.terms
    assert abs(c - 1) < 1e-10 and abs(lam - 1) < 1e-10 and d == 0
    assert res.supremum.atom == 0.0 and res.infimum.atom == 0.0


def test_brownian_drift_matches_closed_form():
    # exact roots of q - i mu w + sigma^2 w^2 / 2 give exponential extrema
    mu, sigma, q = 0.3, 1.2, 5.0
    res = run_pipeline(BrownianDrift(mu=mu, sigma=sigma), StoppingTime("exponential", q), PipelineOptions(count=2))
    lam_plus = (-mu + math.sqrt(mu * mu + 2 * q * sigma**2)) / sigma**2
    lam_minus = (mu + math.sqrt(mu * mu + 2 * q * sigma**2)) / sigma**2
    assert res.supremum.terms[0][1].real == pytest.approx(lam_plus, rel=1e-10)
    assert res.infimum.terms[0][1].real == pytest.approx(lam_minus, rel=1e-10)


def test_published_coefficients_bypass_fit():
    opts = PipelineOptions(count={"upper": 2, "lower": 1}, coefficients=(1 / 4.5,) * 3, a0=0.0)
    res = run_pipeline(CosechSquaredJumps(mu=2.0, sigma=2.0), StoppingTime("exponential", 5.0), opts)
    assert np.allclose(res.approximant.coefficients, 1 / 4.5)
    assert res.supremum.atom == pytest.approx(0.2500328, abs=1e-6)


def test_stage_named_on_failure():
    opts = PipelineOptions(count=2, coefficients=(1.0,))
    with pytest.raises(PipelineError) as exc:
        run_pipeline(BrownianDrift(mu=0.0, sigma=1.0), StoppingTime("exponential", 1.0), opts)
    assert exc.value.stage == "fit"
    with pytest.raises(PipelineError) as exc:
        run_pipeline(CosechSquaredJumps(mu=2.0, sigma=2.0), StoppingTime("geometric", 0.7), PipelineOptions(count=2))
    assert exc.value.stage == "poles"
    with pytest.raises(PipelineError) as exc:
        run_pipeline(BrownianDrift(mu=0.0, sigma=1.0), StoppingTime("exponential", 1.0), PipelineOptions(poles=(1.0 + 0j,)))
    assert exc.value.stage in STAGES


def test_approximant_close_to_h():
    m, s, opts = CASES["compound_poisson-exp1"]
    res = run_pipeline(MODELS[m], STOPS[s], opts)
    w = make_grid(64.0, 2**12)
    err = np.max(np.abs(res.approximant(w) - stopped_cf(MODELS[m], STOPS[s], w)))
    assert err < 0.05
