"""Family registry, parsing, densities, moments, and sampling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lskl import (
    FAMILIES,
    Dataset,
    default_params,
    get_family,
    instance,
    log_density,
    log_density_vec,
    log_mean_var,
    mean_var,
    model_text,
    moment,
    parse_model,
    sample,
    support,
    to_location_scale,
)
from lskl.errors import NoClosedFormError, ParseError

from oracles import scipy_dist

ALL = sorted(FAMILIES)

# one representative instance per family, plus shifted variants
REPRESENTATIVES = [
    "normal(a=0.3,b=1.7)",
    "halfnormal(sigma=2.5)",
    "halfnormal(sigma=0.8,shift=1.5)",
    "exponential(beta=0.4)",
    "exponential(beta=3.0,shift=-2.0)",
    "gumbelmin(a=-1.0,b=0.6)",
    "logistic(a=2.0,b=0.9)",
    "uniform(a=-1.0,b=3.0)",
    "lognormal(mu=0.5,tau=4.0)",
    "lognormal(mu=-0.2,tau=0.5,shift=0.7)",
    "weibull(lambda=2.0,kappa=1.8)",
    "weibull(lambda=0.9,kappa=0.6,shift=0.3)",
]


# ---------------------------------------------------------------------------
# registry and parsing
# ---------------------------------------------------------------------------


def test_registry_contains_the_eight_families():
    assert ALL == [
        "exponential",
        "gumbelmin",
        "halfnormal",
        "logistic",
        "lognormal",
        "normal",
        "uniform",
        "weibull",
    ]


def test_family_kinds():
    kinds = {name: FAMILIES[name].kind for name in ALL}
    assert kinds["normal"] == "genuine_location_scale"
    assert kinds["gumbelmin"] == "genuine_location_scale"
    assert kinds["logistic"] == "genuine_location_scale"
    assert kinds["uniform"] == "genuine_location_scale"
    assert kinds["halfnormal"] == "scale_only"
    assert kinds["exponential"] == "scale_only"
    assert kinds["lognormal"] == "transformable"
    assert kinds["weibull"] == "transformable"


@pytest.mark.parametrize(
    "alias,name",
    [
        ("half-normal", "halfnormal"),
        ("Half_Normal", "halfnormal"),
        ("exp", "exponential"),
        ("gumbel-min", "gumbelmin"),
        ("log-normal", "lognormal"),
        ("gumbel", "gumbelmin"),
    ],
)
def test_family_aliases(alias, name):
    assert get_family(alias).name == name


def test_unknown_family_is_a_parse_error():
    with pytest.raises(ParseError):
        get_family("cauchy")


@pytest.mark.parametrize("text", REPRESENTATIVES)
def test_model_text_round_trip(text):
    m = parse_model(text)
    assert parse_model(model_text(m)) == m


def test_canonical_text_shape():
    m = instance("normal", {"a": 1.0, "b": 2.0})
    assert model_text(m) == "normal(a=1.0,b=2.0)"
    s = instance("exponential", {"beta": 0.5}, shift=1.25)
    assert model_text(s) == "exponential(beta=0.5,shift=1.25)"


def test_parse_accepts_whitespace_and_case():
    m = parse_model("  Normal( a = 1 , b = 2 ) ")
    assert m.family.name == "normal"
    assert m.params == {"a": 1.0, "b": 2.0}


@pytest.mark.parametrize(
    "bad",
    [
        "nosuch(a=1)",
        "normal(a=1",
        "normal a=1",
        "normal(q=1,b=1)",
        "normal(a=1)",
        "normal(a=1,b=0)",
        "normal(a=1,b=-2)",
        "normal(a=1,b=nanb)",
        "normal(a=1,b=2,shift=3)",
        "weibull(lambda=1,kappa=1,shift=bad)",
        "exponential()",
        "",
    ],
)
def test_parse_rejects_malformed_specs(bad):
    with pytest.raises(ParseError):
        parse_model(bad)


def test_instance_validates_directly():
    with pytest.raises(ValueError):
        instance("normal", {"a": 0.0, "b": 1.0}, shift=1.0)
    with pytest.raises(ValueError):
        instance("exponential", {"beta": -1.0})
    with pytest.raises(ValueError):
        instance("lognormal", {"mu": 0.0, "tau": float("inf")})
    with pytest.raises(ValueError):
        instance("normal", {"a": 0.0})


def test_defaults_exist_for_every_family():
    for name in ALL:
        fam = get_family(name)
        m = instance(fam, default_params(fam))
        assert math.isfinite(mean_var(m)[0])


# ---------------------------------------------------------------------------
# densities against scipy.stats
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("text", REPRESENTATIVES)
def test_log_density_matches_scipy(text):
    m = parse_model(text)
    d = scipy_dist(m)
    lo, hi = support(m)
    a = lo if math.isfinite(lo) else -8.0
    b = hi if math.isfinite(hi) else a + 16.0
    xs = np.linspace(a + 1e-9 * (b - a + 1.0), b - 1e-9 * (b - a + 1.0), 211)
    ours = np.array([log_density(m, float(x)) for x in xs])
    ref = d.logpdf(xs)
    assert np.allclose(ours, ref, rtol=1e-12, atol=1e-10)
    # the vectorized form agrees with the scalar form
    assert np.allclose(log_density_vec(m, xs), ours, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("text", REPRESENTATIVES)
def test_log_density_is_minus_inf_outside_support(text):
    m = parse_model(text)
    lo, hi = support(m)
    if math.isfinite(lo):
        assert log_density(m, lo - 0.5) == -math.inf
    if math.isfinite(hi):
        assert log_density(m, hi + 0.5) == -math.inf


def test_weibull_boundary_conventions():
    lam = 2.0
    assert log_density(instance("weibull", {"lambda": lam, "kappa": 1.0}), 0.0) == (
        pytest.approx(-math.log(lam))
    )
    assert log_density(instance("weibull", {"lambda": lam, "kappa": 2.0}), 0.0) == -math.inf
    assert log_density(instance("weibull", {"lambda": lam, "kappa": 0.5}), 0.0) == math.inf


def test_uniform_support_is_lower_and_width():
    m = instance("uniform", {"a": -1.0, "b": 3.0})
    assert support(m) == (-1.0, 2.0)
    assert log_density(m, 0.0) == pytest.approx(-math.log(3.0))


def test_shift_translates_support():
    m = instance("exponential", {"beta": 1.0}, shift=2.0)
    assert support(m) == (2.0, math.inf)
    base = instance("exponential", {"beta": 1.0})
    assert log_density(m, 2.7) == pytest.approx(log_density(base, 0.7), abs=1e-14)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("text", REPRESENTATIVES)
def test_mean_var_matches_scipy(text):
    m = parse_model(text)
    d = scipy_dist(m)
    mean, var = mean_var(m)
    assert mean == pytest.approx(float(d.mean()), rel=1e-10, abs=1e-12)
    assert var == pytest.approx(float(d.var()), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize(
    "text",
    [
        "exponential(beta=0.4)",
        "halfnormal(sigma=2.5)",
        "lognormal(mu=0.5,tau=4.0)",
        "weibull(lambda=2.0,kappa=1.8)",
    ],
)
def test_log_moments_match_scipy_expect(text):
    m = parse_model(text)
    d = scipy_dist(m)
    ml, vl = log_mean_var(m)
    ref_m = d.expect(lambda x: math.log(x))
    ref_v = d.expect(lambda x: math.log(x) ** 2) - ref_m**2
    assert ml == pytest.approx(ref_m, abs=1e-9)
    assert vl == pytest.approx(ref_v, abs=1e-9)


def test_moment_descriptor_table():
    ex = instance("exponential", {"beta": 2.0})
    assert moment(ex, "E(x)") == pytest.approx(2.0)
    assert moment(ex, "E(x^2)") == pytest.approx(8.0)
    hn = instance("halfnormal", {"sigma": 3.0})
    assert moment(hn, "E(x)") == pytest.approx(3.0 * math.sqrt(2.0 / math.pi))
    assert moment(hn, "E(x^2)") == pytest.approx(9.0)
    wb = instance("weibull", {"lambda": 2.0, "kappa": 0.5})
    assert moment(wb, "Var(log x)") == pytest.approx(math.pi**2 / (6.0 * 0.25))
    ln = instance("lognormal", {"mu": 1.0, "tau": 4.0})
    assert moment(ln, "E(log x)") == pytest.approx(1.0)
    assert moment(ln, "Var(log x)") == pytest.approx(0.25)


def test_moment_unknown_descriptor_raises():
    with pytest.raises(NoClosedFormError):
        moment(instance("exponential", {"beta": 1.0}), "E(sin x)")


def test_shifted_moments_translate():
    base = instance("exponential", {"beta": 2.0})
    shifted = instance("exponential", {"beta": 2.0}, shift=5.0)
    assert moment(shifted, "E(x)") == pytest.approx(moment(base, "E(x)") + 5.0)
    m0, v0 = mean_var(base)
    m1, v1 = mean_var(shifted)
    assert m1 == pytest.approx(m0 + 5.0)
    assert v1 == pytest.approx(v0)


# ---------------------------------------------------------------------------
# the log transform onto location-scale form
# ---------------------------------------------------------------------------


def test_lognormal_maps_to_normal_on_logs():
    m = parse_model("lognormal(mu=0.5,tau=4.0)")
    ls = to_location_scale(m)
    assert ls.family.name == "normal"
    assert ls.params["a"] == pytest.approx(0.5)
    assert ls.params["b"] == pytest.approx(0.5)  # 1/sqrt(tau)
    for x in (0.2, 1.0, 3.7):
        direct = log_density(m, x)
        via = log_density(ls, math.log(x)) - math.log(x)
        assert direct == pytest.approx(via, abs=1e-12)


def test_weibull_maps_to_gumbelmin_on_logs():
    m = parse_model("weibull(lambda=2.0,kappa=1.8)")
    ls = to_location_scale(m)
    assert ls.family.name == "gumbelmin"
    assert ls.params["a"] == pytest.approx(math.log(2.0))
    assert ls.params["b"] == pytest.approx(1.0 / 1.8)
    for x in (0.3, 1.1, 4.0):
        direct = log_density(m, x)
        via = log_density(ls, math.log(x)) - math.log(x)
        assert direct == pytest.approx(via, abs=1e-12)


def test_location_scale_image_of_ls_families_is_identity():
    m = parse_model("logistic(a=2.0,b=0.9)")
    assert to_location_scale(m) == m
    hn = parse_model("halfnormal(sigma=2.0)")
    ls = to_location_scale(hn)
    assert ls.family.name == "halfnormal"
    assert ls.params["sigma"] == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("text", REPRESENTATIVES)
def test_draws_stay_inside_support(text):
    m = parse_model(text)
    lo, hi = support(m)
    x = sample(m, 4000, seed=11).values
    assert float(x.min()) >= lo
    assert float(x.max()) <= hi


@pytest.mark.parametrize("text", REPRESENTATIVES)
def test_draws_follow_the_distribution(text):
    m = parse_model(text)
    x = sample(m, 4000, seed=5).values
    stat = stats.kstest(x, scipy_dist(m).cdf)
    assert stat.pvalue > 1e-4


def test_sampling_is_deterministic_in_the_seed():
    m = parse_model("weibull(lambda=2.0,kappa=1.8)")
    a = sample(m, 100, seed=42).values
    b = sample(m, 100, seed=42).values
    c = sample(m, 100, seed=43).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_dataset_flattens_and_counts():
    d = Dataset([[1.0, 2.0], [3.0, 4.0]], provenance="unit")
    assert len(d) == 4
    assert d.values.dtype == np.float64
    assert d.provenance == "unit"


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

_scales = st.floats(min_value=0.05, max_value=50.0, allow_nan=False)
_locs = st.floats(min_value=-30.0, max_value=30.0, allow_nan=False)


@settings(max_examples=60, derandomize=True, deadline=None)
@given(name=st.sampled_from(ALL), loc=_locs, scale=_scales)
def test_text_round_trip_property(name, loc, scale):
    fam = get_family(name)
    params = dict(default_params(fam))
    for key in params:
        if key in ("a", "mu"):
            params[key] = loc
        elif key == "tau":
            params[key] = 1.0 / (scale * scale)
        elif key == "kappa":
            params[key] = max(scale, 0.1)
        else:
            params[key] = scale
    m = instance(fam, params)
    assert parse_model(model_text(m)) == m


@settings(max_examples=40, derandomize=True, deadline=None)
@given(name=st.sampled_from(ALL), scale=_scales, seed=st.integers(0, 2**31))
def test_density_is_finite_on_draws_property(name, scale, seed):
    fam = get_family(name)
    params = dict(default_params(fam))
    for key in params:
        if key == "tau":
            params[key] = 1.0 / (scale * scale)
        elif key not in ("a", "mu"):
            params[key] = scale
    m = instance(fam, params)
    x = sample(m, 64, seed=seed).values
    lp = log_density_vec(m, x)
    assert np.all(np.isfinite(lp))
