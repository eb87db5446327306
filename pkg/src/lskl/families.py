"""Location-scale families, transformable families, densities, moments,
and seeded sampling.

A family is identified by a reduced density ``h`` with location 0 and
scale 1; a member has density ``f(x; a, b) = h((x - a) / b) / b``.  Two
families here are not location-scale on the original axis but become so
after ``z = log(x - shift)``: the lognormal (image: normal) and the
Weibull (image: Gumbel for the minimum).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import NoClosedFormError, ParseError

EULER_GAMMA = 0.577215664901532860606512090082  # Euler-Mascheroni constant

_LOG_2PI = math.log(2.0 * math.pi)
_INF = math.inf

GENUINE = "genuine_location_scale"
LOCATION_ONLY = "location_only"
SCALE_ONLY = "scale_only"
TRANSFORMABLE = "transformable"


@dataclass(frozen=True, eq=False)
class TransformSpec:
    """Monotone map sending a family onto a genuine location-scale family.

    The forward map is ``z = log(x - shift)``; ``param_map`` converts the
    native parameters into the (location, scale) of the target family and
    ``param_unmap`` inverts it.
    """

    target_name: str
    shift: float = 0.0
    forward: Callable[[float, float], float] = field(
        default=lambda x, shift=0.0: math.log(x - shift), compare=False
    )
    param_map: Callable[[Mapping[str, float]], tuple[float, float]] = field(
        default=None, compare=False
    )
    param_unmap: Callable[[float, float], dict] = field(default=None, compare=False)


@dataclass(frozen=True, eq=False)
class FamilySpec:
    """Identity of one of the supported families.

    Parameters
    ----------
    name : str
        Canonical lowercase identifier, e.g. ``"halfnormal"``.
    kind : str
        One of ``genuine_location_scale``, ``location_only``, ``scale_only``,
        ``transformable``.
    param_names : tuple of str
        Canonical parameter names in their fixed order.
    log_reduced : callable or None
        Log of the reduced density ``h`` (location 0, scale 1); ``None`` for
        transformable families, which carry ``transform`` instead.
    reduced_support : tuple or None
        Support of the reduced density.
    transform : TransformSpec or None
        Present exactly when ``kind == "transformable"``.
    """

    name: str
    kind: str
    param_names: tuple[str, ...]
    log_reduced: Callable[[float], float] | None = field(compare=False, default=None)
    reduced_support: tuple[float, float] | None = None
    transform: TransformSpec | None = field(compare=False, default=None)

    def __eq__(self, other):
        return isinstance(other, FamilySpec) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"FamilySpec({self.name!r})"


def _log_h_normal(z: float) -> float:
    return -0.5 * z * z - 0.5 * _LOG_2PI


def _log_h_halfnormal(z: float) -> float:
    if z < 0.0:
        return -_INF
    return 0.5 * math.log(2.0 / math.pi) - 0.5 * z * z


def _log_h_exponential(z: float) -> float:
    if z < 0.0:
        return -_INF
    return -z


def _log_h_gumbelmin(z: float) -> float:
    # type I extreme value for the minimum: h(z) = exp(z - e^z) on R
    if z > 700.0:
        return -_INF
    return z - math.exp(z)


def _log_h_logistic(z: float) -> float:
    t = abs(z)
    return -t - 2.0 * math.log1p(math.exp(-t))


def _log_h_uniform(z: float) -> float:
    return 0.0 if 0.0 <= z <= 1.0 else -_INF


_LS_FAMILIES = {
    "normal": FamilySpec("normal", GENUINE, ("a", "b"), _log_h_normal, (-_INF, _INF)),
    "halfnormal": FamilySpec(
        "halfnormal", SCALE_ONLY, ("sigma",), _log_h_halfnormal, (0.0, _INF)
    ),
    "exponential": FamilySpec(
        "exponential", SCALE_ONLY, ("beta",), _log_h_exponential, (0.0, _INF)
    ),
    "gumbelmin": FamilySpec(
        "gumbelmin", GENUINE, ("a", "b"), _log_h_gumbelmin, (-_INF, _INF)
    ),
    "logistic": FamilySpec(
        "logistic", GENUINE, ("a", "b"), _log_h_logistic, (-_INF, _INF)
    ),
    # parameterized by lower endpoint a and width b
    "uniform": FamilySpec("uniform", GENUINE, ("a", "b"), _log_h_uniform, (0.0, 1.0)),
}

_LOGNORMAL_TRANSFORM = TransformSpec(
    target_name="normal",
    param_map=lambda p: (p["mu"], 1.0 / math.sqrt(p["tau"])),
    param_unmap=lambda a, b: {"mu": a, "tau": 1.0 / (b * b)},
)

_WEIBULL_TRANSFORM = TransformSpec(
    target_name="gumbelmin",
    param_map=lambda p: (math.log(p["lambda"]), 1.0 / p["kappa"]),
    param_unmap=lambda a, b: {"lambda": math.exp(a), "kappa": 1.0 / b},
)

FAMILIES: dict[str, FamilySpec] = {
    **_LS_FAMILIES,
    "lognormal": FamilySpec(
        "lognormal", TRANSFORMABLE, ("mu", "tau"), None, None, _LOGNORMAL_TRANSFORM
    ),
    "weibull": FamilySpec(
        "weibull", TRANSFORMABLE, ("lambda", "kappa"), None, None, _WEIBULL_TRANSFORM
    ),
}

_ALIASES = {
    "half-normal": "halfnormal",
    "half_normal": "halfnormal",
    "gumbel-min": "gumbelmin",
    "gumbel_min": "gumbelmin",
    "gumbel": "gumbelmin",
    "log-normal": "lognormal",
    "log_normal": "lognormal",
    "exp": "exponential",
}

# parameters that must be strictly positive
_POSITIVE = {"b", "sigma", "beta", "tau", "lambda", "kappa"}

# families whose support is bounded below and may carry a translation
_SHIFTABLE = {"halfnormal", "exponential", "lognormal", "weibull"}

_DEFAULT_PARAMS = {
    "normal": {"a": 0.0, "b": 1.0},
    "halfnormal": {"sigma": 1.0},
    "exponential": {"beta": 1.0},
    "gumbelmin": {"a": 0.0, "b": 1.0},
    "logistic": {"a": 0.0, "b": 1.0},
    "uniform": {"a": 0.0, "b": 1.0},
    "lognormal": {"mu": 0.0, "tau": 1.0},
    "weibull": {"lambda": 1.0, "kappa": 1.0},
}


def get_family(name: str) -> FamilySpec:
    """Look up a family by (case-insensitive, alias-tolerant) name."""
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    try:
        return FAMILIES[key]
    except KeyError:
        raise ParseError(
            f"unknown family {name!r}; known families: {', '.join(FAMILIES)}"
        ) from None


def default_params(family: FamilySpec) -> dict:
    return dict(_DEFAULT_PARAMS[family.name])


@dataclass(frozen=True, eq=False)
class ModelInstance:
    """A family plus concrete parameter values.

    ``params`` holds the family's canonical parameters, e.g.
    ``{"sigma": 2.0}`` for a half-normal or ``{"lambda": 1.0, "kappa": 2.0}``
    for a Weibull.  ``shift`` translates the support of the four families
    bounded below; it defaults to 0 and is rejected elsewhere.
    """

    family: FamilySpec
    params: dict
    shift: float = 0.0

    def __post_init__(self):
        expected = set(self.family.param_names)
        got = set(self.params)
        if got != expected:
            raise ValueError(
                f"{self.family.name} expects parameters {sorted(expected)}, "
                f"got {sorted(got)}"
            )
        for name, value in self.params.items():
            v = float(value)
            if not math.isfinite(v):
                raise ValueError(f"{self.family.name}.{name} must be finite, got {value}")
            if name in _POSITIVE and v <= 0.0:
                raise ValueError(
                    f"{self.family.name}.{name} must be strictly positive, got {value}"
                )
            self.params[name] = v
        if not math.isfinite(self.shift):
            raise ValueError("shift must be finite")
        if self.shift != 0.0 and self.family.name not in _SHIFTABLE:
            raise ValueError(f"shift is not supported for family {self.family.name}")

    def __eq__(self, other):
        return (
            isinstance(other, ModelInstance)
            and other.family == self.family
            and other.params == self.params
            and other.shift == self.shift
        )

    def __repr__(self):
        return f"ModelInstance({model_text(self)!r})"


def instance(family: FamilySpec | str, params: Mapping[str, float] | None = None,
             shift: float = 0.0, **kw) -> ModelInstance:
    """Convenience constructor: ``instance("weibull", {"lambda": 1, "kappa": 2})``
    or ``instance("normal", a=0, b=1)``."""
    fam = get_family(family) if isinstance(family, str) else family
    p = dict(params) if params else {}
    p.update(kw)
    return ModelInstance(fam, p, shift)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered vector of observations plus a provenance note."""

    values: np.ndarray
    provenance: str | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64).ravel()
        )

    def __len__(self):
        return self.values.size


# ---------------------------------------------------------------------------
# support and densities
# ---------------------------------------------------------------------------


def support(m: ModelInstance) -> tuple[float, float]:
    """Support interval of the instance (endpoints may be infinite)."""
    name = m.family.name
    if name in ("normal", "gumbelmin", "logistic"):
        return (-_INF, _INF)
    if name == "uniform":
        return (m.params["a"], m.params["a"] + m.params["b"])
    # halfnormal, exponential, lognormal, weibull
    return (m.shift, _INF)


def _location_scale_of(m: ModelInstance) -> tuple[float, float]:
    """(a, b) of the instance itself, or of its location-scale image."""
    name = m.family.name
    if name == "halfnormal":
        return 0.0, m.params["sigma"]
    if name == "exponential":
        return 0.0, m.params["beta"]
    if m.family.kind == TRANSFORMABLE:
        return m.family.transform.param_map(m.params)
    return m.params["a"], m.params["b"]


def log_density(m: ModelInstance, x: float) -> float:
    """Log density of ``m`` at a point.

    Returns ``-inf`` outside the support; out-of-support evaluation is a
    value, never an error.
    """
    name = m.family.name
    x = float(x)
    if math.isnan(x):
        return -_INF
    if name == "lognormal":
        y = x - m.shift
        if y <= 0.0:
            return -_INF
        mu, tau = m.params["mu"], m.params["tau"]
        ly = math.log(y)
        return -ly + 0.5 * (math.log(tau) - _LOG_2PI) - 0.5 * tau * (ly - mu) ** 2
    if name == "weibull":
        y = x - m.shift
        lam, kap = m.params["lambda"], m.params["kappa"]
        if y < 0.0:
            return -_INF
        if y == 0.0:
            if kap == 1.0:
                return -math.log(lam)
            return -_INF if kap > 1.0 else _INF
        r = y / lam
        lr = math.log(r)
        t = kap * lr
        return math.log(kap / lam) + (kap - 1.0) * lr - (math.exp(t) if t < 700 else _INF)
    a, b = _location_scale_of(m)
    z = (x - m.shift - a) / b
    lh = m.family.log_reduced(z)
    return lh - math.log(b) if lh > -_INF else -_INF


def scalar_logpdf(m: ModelInstance) -> Callable[[float], float]:
    """A fast scalar closure for ``log_density(m, .)`` (used by quadrature)."""
    name = m.family.name
    s = m.shift
    if name == "lognormal":
        mu, tau = m.params["mu"], m.params["tau"]
        c = 0.5 * (math.log(tau) - _LOG_2PI)

        def lp(x: float) -> float:
            y = x - s
            if y <= 0.0:
                return -_INF
            ly = math.log(y)
            return -ly + c - 0.5 * tau * (ly - mu) ** 2

        return lp
    if name == "weibull":
        lam, kap = m.params["lambda"], m.params["kappa"]
        c = math.log(kap / lam)

        def lp(x: float) -> float:
            y = x - s
            if y <= 0.0:
                return -_INF if y < 0.0 or kap != 1.0 else c
            lr = math.log(y / lam)
            t = kap * lr
            return c + (kap - 1.0) * lr - (math.exp(t) if t < 700 else _INF)

        return lp
    a, b = _location_scale_of(m)
    log_h = m.family.log_reduced
    log_b = math.log(b)
    a_total = a + s

    def lp(x: float) -> float:
        lh = log_h((x - a_total) / b)
        return lh - log_b if lh > -_INF else -_INF

    return lp


def log_density_vec(m: ModelInstance, xs: np.ndarray) -> np.ndarray:
    """Vectorized log density; ``-inf`` wherever the point is out of support."""
    x = np.asarray(xs, dtype=np.float64)
    out = np.full(x.shape, -np.inf)
    name = m.family.name
    y = x - m.shift
    if name == "lognormal":
        mu, tau = m.params["mu"], m.params["tau"]
        ok = y > 0.0
        ly = np.log(y, where=ok, out=np.zeros_like(y))
        out[ok] = (-ly + 0.5 * (math.log(tau) - _LOG_2PI) - 0.5 * tau * (ly - mu) ** 2)[ok]
        return out
    if name == "weibull":
        lam, kap = m.params["lambda"], m.params["kappa"]
        ok = y > 0.0
        lr = np.log(y / lam, where=ok, out=np.zeros_like(y))
        t = kap * lr
        with np.errstate(over="ignore"):
            out[ok] = (math.log(kap / lam) + (kap - 1.0) * lr - np.exp(t))[ok]
        boundary = y == 0.0
        if np.any(boundary):
            out[boundary] = -math.log(lam) if kap == 1.0 else (-np.inf if kap > 1.0 else np.inf)
        return out
    a, b = _location_scale_of(m)
    z = (y - a) / b
    if name == "normal":
        return -0.5 * z * z - 0.5 * _LOG_2PI - math.log(b)
    if name == "gumbelmin":
        with np.errstate(over="ignore"):
            out = z - np.exp(z) - math.log(b)
        return np.where(np.isnan(out), -np.inf, out)
    if name == "logistic":
        t = np.abs(z)
        return -t - 2.0 * np.log1p(np.exp(-t)) - math.log(b)
    if name == "halfnormal":
        ok = z >= 0.0
        out[ok] = (0.5 * math.log(2.0 / math.pi) - 0.5 * z[ok] * z[ok]) - math.log(b)
        return out
    if name == "exponential":
        ok = z >= 0.0
        out[ok] = -z[ok] - math.log(b)
        return out
    if name == "uniform":
        ok = (z >= 0.0) & (z <= 1.0)
        out[ok] = -math.log(b)
        return out
    raise AssertionError(name)


# ---------------------------------------------------------------------------
# closed-form moments
# ---------------------------------------------------------------------------

#: descriptors accepted by :func:`moment`
MOMENT_KINDS = ("E(x)", "E(x^2)", "E(log x)", "E(x^p)", "Var(log x)")


def moment(m: ModelInstance, which: str, p: float | None = None) -> float:
    """Closed-form moment of an instance.

    Supported: ``E(x)`` and ``E(x^2)`` for the half-normal and exponential;
    ``E(log x)``, ``E(x^p)`` (pass ``p``) and ``Var(log x)`` for the
    lognormal and Weibull.  Anything else raises :class:`NoClosedFormError`
    directing the caller to numeric integration.
    """
    name = m.family.name
    s = m.shift

    def no_form() -> float:
        raise NoClosedFormError(
            f"no closed form for {which!r} of {name}"
            + (" with shift" if s != 0.0 else "")
            + "; integrate numerically"
        )

    if which == "E(x)":
        if name == "halfnormal":
            return s + m.params["sigma"] * math.sqrt(2.0 / math.pi)
        if name == "exponential":
            return s + m.params["beta"]
        no_form()
    elif which == "E(x^2)":
        if name == "halfnormal":
            e1 = m.params["sigma"] * math.sqrt(2.0 / math.pi)
            return m.params["sigma"] ** 2 + 2.0 * s * e1 + s * s
        if name == "exponential":
            b = m.params["beta"]
            return 2.0 * b * b + 2.0 * s * b + s * s
        no_form()
    elif which == "E(log x)":
        if s != 0.0:
            no_form()
        if name == "lognormal":
            return m.params["mu"]
        if name == "weibull":
            return math.log(m.params["lambda"]) - EULER_GAMMA / m.params["kappa"]
        no_form()
    elif which == "E(x^p)":
        if p is None:
            raise ValueError("E(x^p) requires the exponent p")
        if s != 0.0:
            no_form()
        if name == "lognormal":
            mu, tau = m.params["mu"], m.params["tau"]
            return math.exp(p * p / (2.0 * tau) + mu * p)
        if name == "weibull":
            lam, kap = m.params["lambda"], m.params["kappa"]
            return lam**p * math.gamma(1.0 + p / kap)
        no_form()
    elif which == "Var(log x)":
        if s != 0.0:
            no_form()
        if name == "lognormal":
            return 1.0 / m.params["tau"]
        if name == "weibull":
            return math.pi**2 / (6.0 * m.params["kappa"] ** 2)
        no_form()
    else:
        raise NoClosedFormError(
            f"unknown moment descriptor {which!r}; expected one of {MOMENT_KINDS}"
        )


def mean_var(m: ModelInstance) -> tuple[float, float]:
    """Mean and variance (closed form for every family)."""
    name = m.family.name
    p = m.params
    if name == "normal":
        mu, v = p["a"], p["b"] ** 2
    elif name == "halfnormal":
        mu = p["sigma"] * math.sqrt(2.0 / math.pi)
        v = p["sigma"] ** 2 * (1.0 - 2.0 / math.pi)
    elif name == "exponential":
        mu, v = p["beta"], p["beta"] ** 2
    elif name == "gumbelmin":
        mu = p["a"] - EULER_GAMMA * p["b"]
        v = p["b"] ** 2 * math.pi**2 / 6.0
    elif name == "logistic":
        mu, v = p["a"], p["b"] ** 2 * math.pi**2 / 3.0
    elif name == "uniform":
        mu, v = p["a"] + 0.5 * p["b"], p["b"] ** 2 / 12.0
    elif name == "lognormal":
        mu = math.exp(p["mu"] + 0.5 / p["tau"])
        v = math.expm1(1.0 / p["tau"]) * math.exp(2.0 * p["mu"] + 1.0 / p["tau"])
    elif name == "weibull":
        lam, kap = p["lambda"], p["kappa"]
        g1 = math.gamma(1.0 + 1.0 / kap)
        mu = lam * g1
        v = lam**2 * (math.gamma(1.0 + 2.0 / kap) - g1 * g1)
    else:
        raise AssertionError(name)
    return mu + m.shift, v


def log_mean_var(m: ModelInstance) -> tuple[float, float]:
    """Mean and variance of ``log x`` for positive-support instances.

    Closed form for the four bounded-below families with zero shift.
    """
    name = m.family.name
    if m.shift != 0.0:
        raise NoClosedFormError(f"no closed form for log moments of shifted {name}")
    p = m.params
    if name == "exponential":
        return math.log(p["beta"]) - EULER_GAMMA, math.pi**2 / 6.0
    if name == "halfnormal":
        return (
            math.log(p["sigma"]) - 0.5 * (EULER_GAMMA + math.log(2.0)),
            math.pi**2 / 8.0,
        )
    if name == "lognormal":
        return p["mu"], 1.0 / p["tau"]
    if name == "weibull":
        lam, kap = p["lambda"], p["kappa"]
        return math.log(lam) - EULER_GAMMA / kap, math.pi**2 / (6.0 * kap**2)
    raise NoClosedFormError(f"no closed form for log moments of {name}")


# ---------------------------------------------------------------------------
# transformation to a genuine location-scale member
# ---------------------------------------------------------------------------


def to_location_scale(m: ModelInstance) -> ModelInstance:
    """Map a transformable instance to its location-scale image.

    Weibull(lambda, kappa) maps to GumbelMin(a=log lambda, b=1/kappa),
    LogNormal(mu, tau) to Normal(a=mu, b=1/sqrt(tau)); the log transform
    absorbs any support shift.  Genuine members come back unchanged.
    """
    if m.family.kind != TRANSFORMABLE:
        return m
    a, b = m.family.transform.param_map(m.params)
    target = get_family(m.family.transform.target_name)
    return ModelInstance(target, {"a": a, "b": b})


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def draw(m: ModelInstance, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` values using an existing generator (chunk-friendly)."""
    name = m.family.name
    p = m.params
    if name == "normal":
        x = p["a"] + p["b"] * rng.standard_normal(n)
    elif name == "halfnormal":
        x = p["sigma"] * np.abs(rng.standard_normal(n))
    elif name == "lognormal":
        x = np.exp(p["mu"] + rng.standard_normal(n) / math.sqrt(p["tau"]))
    elif name == "exponential":
        x = -p["beta"] * np.log1p(-rng.random(n))
    elif name == "weibull":
        x = p["lambda"] * (-np.log1p(-rng.random(n))) ** (1.0 / p["kappa"])
    elif name == "gumbelmin":
        u = np.clip(rng.random(n), 1e-16, 1.0 - 1e-16)
        x = p["a"] + p["b"] * np.log(-np.log1p(-u))
    elif name == "logistic":
        u = np.clip(rng.random(n), 1e-16, 1.0 - 1e-16)
        x = p["a"] + p["b"] * (np.log(u) - np.log1p(-u))
    elif name == "uniform":
        x = p["a"] + p["b"] * rng.random(n)
    else:
        raise AssertionError(name)
    return x + m.shift


def sample(m: ModelInstance, n: int, seed: int) -> Dataset:
    """``n`` independent draws from ``m``, deterministic given ``seed``."""
    if n < 1:
        raise ValueError(f"need n >= 1 draws, got {n}")
    rng = np.random.default_rng(seed)
    values = draw(m, int(n), rng)
    return Dataset(values, provenance=f"{model_text(m)};n={n};seed={seed}")


# ---------------------------------------------------------------------------
# canonical text form, e.g. halfnormal(sigma=2) or weibull(lambda=1,kappa=2)
# ---------------------------------------------------------------------------

_MODEL_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_\-]*)\s*(?:\((.*)\))?\s*$", re.S)


def parse_model(text: str) -> ModelInstance:
    """Parse the canonical text form ``family(name=value, ...)``."""
    match = _MODEL_RE.match(text or "")
    if not match:
        raise ParseError(f"malformed model spec {text!r}")
    fam = get_family(match.group(1))
    body = match.group(2)
    if body is None or not body.strip():
        raise ParseError(
            f"model spec {text!r} has no parameters; expected e.g. "
            f"{fam.name}({', '.join(f'{k}=...' for k in fam.param_names)})"
        )
    params: dict[str, float] = {}
    shift = 0.0
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ParseError(f"expected name=value, got {part!r} in {text!r}")
        key, _, raw = part.partition("=")
        key = key.strip().lower()
        try:
            value = float(raw.strip())
        except ValueError:
            raise ParseError(f"bad numeric value {raw.strip()!r} in {text!r}") from None
        if key == "shift":
            shift = value
        elif key in params:
            raise ParseError(f"duplicate parameter {key!r} in {text!r}")
        else:
            params[key] = value
    try:
        return ModelInstance(fam, params, shift)
    except ValueError as exc:
        raise ParseError(f"invalid model spec {text!r}: {exc}") from None


def model_text(m: ModelInstance) -> str:
    """Canonical text form of an instance (inverse of :func:`parse_model`)."""
    parts = [f"{name}={m.params[name]!r}" for name in m.family.param_names]
    if m.shift != 0.0:
        parts.append(f"shift={m.shift!r}")
    return f"{m.family.name}({','.join(parts)})"
