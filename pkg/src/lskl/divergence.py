"""Kullback-Leibler divergence between model instances.

Four routes: exact closed forms for registered pairs, adaptive quadrature,
plain Monte Carlo, and the empirical estimator on observed data.  All
return a :class:`KLValue` so callers can see the method used and the
error bound claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import (
    DataModelMismatchError,
    IntegrationFailureError,
    NoClosedFormError,
)
from .families import (
    Dataset,
    ModelInstance,
    draw,
    log_density_vec,
    mean_var,
    scalar_logpdf,
    support,
)

_INF = math.inf


@dataclass(frozen=True)
class KLValue:
    """A divergence number plus how it was obtained.

    ``value`` may be ``+inf`` (first argument puts mass where the second
    has none); ``support_violation`` records that case.  ``error_bound``
    is the integration error estimate, the Monte Carlo standard error,
    or ``None`` when no bound is claimed.
    """

    value: float
    method: str
    error_bound: float | None = None
    n_used: int | None = None
    support_violation: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)


def support_included(f1: ModelInstance, f2: ModelInstance) -> bool:
    """True when the support of ``f1`` sits inside that of ``f2``.

    Endpoint equality is allowed: a single boundary point is a null set
    and cannot make the divergence infinite.
    """
    lo1, hi1 = support(f1)
    lo2, hi2 = support(f2)
    return lo2 <= lo1 and hi1 <= hi2


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def _kl_normal_normal(p1, p2):
    a1, b1 = p1["a"], p1["b"]
    a2, b2 = p2["a"], p2["b"]
    return math.log(b2 / b1) + (b1 * b1 + (a1 - a2) ** 2) / (2.0 * b2 * b2) - 0.5


def _kl_exp_exp(p1, p2):
    return math.log(p2["beta"] / p1["beta"]) + p1["beta"] / p2["beta"] - 1.0


def _kl_hn_hn(p1, p2):
    s1, s2 = p1["sigma"], p2["sigma"]
    return math.log(s2 / s1) + s1 * s1 / (2.0 * s2 * s2) - 0.5


def _kl_ln_ln(p1, p2):
    t1, t2 = p1["tau"], p2["tau"]
    dm = p1["mu"] - p2["mu"]
    return 0.5 * math.log(t1 / t2) + 0.5 * t2 * (1.0 / t1 + dm * dm) - 0.5


def _kl_hn_exp(p1, p2):
    sigma, beta = p1["sigma"], p2["beta"]
    return (
        0.5 * math.log(2.0 / math.pi)
        - math.log(sigma)
        - 0.5
        + math.log(beta)
        + (sigma / beta) * math.sqrt(2.0 / math.pi)
    )


def _kl_exp_hn(p1, p2):
    beta, sigma = p1["beta"], p2["sigma"]
    return (
        -math.log(beta)
        - 1.0
        + math.log(sigma)
        - 0.5 * math.log(2.0 / math.pi)
        + beta * beta / (sigma * sigma)
    )


def _kl_ln_wb(p1, p2):
    mu, tau = p1["mu"], p1["tau"]
    lam, kap = p2["lambda"], p2["kappa"]
    u = mu - math.log(lam)
    t = kap * kap / (2.0 * tau) + kap * u
    big = math.exp(t) if t < 700.0 else _INF
    return 0.5 * math.log(tau / (2.0 * math.pi)) - 0.5 - math.log(kap) - kap * u + big


def _kl_wb_ln(p1, p2):
    lam, kap = p1["lambda"], p1["kappa"]
    mu, tau = p2["mu"], p2["tau"]
    from .families import EULER_GAMMA

    centered = math.log(lam) - EULER_GAMMA / kap - mu
    return (
        math.log(kap)
        - EULER_GAMMA
        - 1.0
        - 0.5 * math.log(tau / (2.0 * math.pi))
        + 0.5 * tau * (math.pi**2 / (6.0 * kap * kap) + centered * centered)
    )


_CLOSED_FORMS = {
    ("normal", "normal"): _kl_normal_normal,
    ("exponential", "exponential"): _kl_exp_exp,
    ("halfnormal", "halfnormal"): _kl_hn_hn,
    ("lognormal", "lognormal"): _kl_ln_ln,
    ("halfnormal", "exponential"): _kl_hn_exp,
    ("exponential", "halfnormal"): _kl_exp_hn,
    ("lognormal", "weibull"): _kl_ln_wb,
    ("weibull", "lognormal"): _kl_wb_ln,
}

#: ordered pairs of family names with an exact divergence formula
CLOSED_FORM_PAIRS = tuple(sorted(_CLOSED_FORMS))


def kl_closed_form(f1: ModelInstance, f2: ModelInstance) -> KLValue | None:
    """Exact divergence for registered family pairs, else ``None``.

    ``None`` (rather than an error) signals the caller to fall through to
    quadrature.  Instances whose support translations differ also return
    ``None``: the formulas assume a common origin.
    """
    key = (f1.family.name, f2.family.name)
    fn = _CLOSED_FORMS.get(key)
    if fn is None or f1.shift != f2.shift:
        return None
    return KLValue(value=fn(f1.params, f2.params), method="closed_form", error_bound=0.0)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_QUAD_LIMIT = 200


def _piece_scale(m: ModelInstance) -> float:
    # a median-sized length unit; heavy-tailed means would misplace the grid
    name = m.family.name
    p = m.params
    if name == "exponential":
        return p["beta"]
    if name == "halfnormal":
        return p["sigma"]
    if name == "lognormal":
        return math.exp(p["mu"])
    if name == "weibull":
        return p["lambda"]
    mean, var = mean_var(m)
    return math.sqrt(var)


def _integrand(f1: ModelInstance, f2: ModelInstance):
    lp1 = scalar_logpdf(f1)
    lp2 = scalar_logpdf(f2)

    def g(x: float) -> float:
        a = lp1(x)
        if a == -_INF:
            return 0.0
        w = math.exp(a) if a < 700.0 else _INF
        if w == 0.0:
            return 0.0
        return w * (a - lp2(x))

    return g


def kl_quadrature(f1: ModelInstance, f2: ModelInstance, tol: float = 1e-8) -> KLValue:
    """Divergence by adaptive quadrature to absolute tolerance ``tol``.

    The support of ``f1`` is mapped onto finite intervals (rational map
    ``x = lo + s*t/(1-t)`` for half-infinite pieces, split at the location
    for whole-line supports) and each piece integrated adaptively.  If the
    combined error estimate exceeds ``tol`` the partial answer is attached
    to an :class:`IntegrationFailureError` rather than silently returned.
    """
    if not (tol > 0.0):
        raise ValueError("tol must be positive")
    if not support_included(f1, f2):
        return KLValue(
            value=_INF,
            method="quadrature",
            error_bound=None,
            support_violation=True,
            diagnostics={"reason": "support of first instance not contained in second"},
        )
    g = _integrand(f1, f2)
    lo, hi = support(f1)

    pieces = []
    if math.isfinite(lo) and math.isfinite(hi):
        pieces.append((g, lo, hi))
    elif math.isfinite(lo):
        s = _piece_scale(f1)

        def g_right(t: float, _g=g, _lo=lo, _s=s) -> float:
            r = 1.0 - t
            return _g(_lo + _s * t / r) * _s / (r * r)

        pieces.append((g_right, 0.0, 1.0))
    else:
        center = f1.params["a"]
        s = f1.params["b"]

        def g_neg(t: float, _g=g, _c=center, _s=s) -> float:
            r = 1.0 - t
            return _g(_c - _s * t / r) * _s / (r * r)

        def g_pos(t: float, _g=g, _c=center, _s=s) -> float:
            r = 1.0 - t
            return _g(_c + _s * t / r) * _s / (r * r)

        pieces.append((g_neg, 0.0, 1.0))
        pieces.append((g_pos, 0.0, 1.0))

    total = 0.0
    bound = 0.0
    neval = 0
    per_piece = tol / len(pieces)
    for fn, a, b in pieces:
        out = integrate.quad(
            fn,
            a,
            b,
            epsabs=per_piece,
            epsrel=1e-12,
            limit=_QUAD_LIMIT,
            full_output=1,
        )
        value, abserr, info = out[0], out[1], out[2]
        neval += int(info.get("neval", 0))
        if not math.isfinite(value):
            raise IntegrationFailureError(
                f"integrand not integrable between {f1} and {f2} (value {value})",
                partial=value,
                error_bound=None,
            )
        total += value
        bound += abserr
    if not math.isfinite(total) or bound > tol:
        raise IntegrationFailureError(
            f"quadrature error estimate {bound:.3e} exceeds requested "
            f"tolerance {tol:.3e}",
            partial=total,
            error_bound=bound,
        )
    return KLValue(
        value=total,
        method="quadrature",
        error_bound=bound,
        diagnostics={"neval": neval, "pieces": len(pieces)},
    )


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

_CHUNK = 1 << 18


def kl_monte_carlo(
    f1: ModelInstance, f2: ModelInstance, n: int, seed: int
) -> KLValue:
    """Estimate the divergence from ``n`` fresh draws of ``f1``.

    Deterministic given ``seed``.  A draw landing where ``f2`` has zero
    density makes the estimate ``+inf`` (flagged).  ``error_bound`` is
    the standard error of the mean.
    """
    n = int(n)
    if n < 100:
        raise ValueError(f"Monte Carlo needs n >= 100 draws, got {n}")
    rng = np.random.default_rng(seed)
    done = 0
    kept = 0
    s1 = 0.0
    s2 = 0.0
    while done < n:
        m = min(_CHUNK, n - done)
        x = draw(f1, m, rng)
        lp1 = log_density_vec(f1, x)
        lp2 = log_density_vec(f2, x)
        inside = lp1 > -_INF  # boundary draws are probability-zero artifacts
        if np.any(np.isneginf(lp2) & inside):
            return KLValue(
                value=_INF,
                method="monte_carlo",
                error_bound=None,
                n_used=done + m,
                support_violation=True,
                diagnostics={"n": n, "seed": seed},
            )
        d = lp1[inside] - lp2[inside]
        s1 += float(d.sum())
        s2 += float((d * d).sum())
        kept += int(d.size)
        done += m
    mean = s1 / kept
    if kept > 1:
        var = max(s2 - kept * mean * mean, 0.0) / (kept - 1)
        se = math.sqrt(var / kept)
    else:
        se = None
    return KLValue(
        value=mean,
        method="monte_carlo",
        error_bound=se,
        n_used=n,
        diagnostics={"seed": seed},
    )


# ---------------------------------------------------------------------------
# the empirical estimator
# ---------------------------------------------------------------------------


def sample_kl(data: Dataset, f1: ModelInstance, f2: ModelInstance) -> KLValue:
    """Mean log-density ratio of ``f1`` over ``f2`` on observed data.

    A datum outside the support of ``f1`` raises
    :class:`DataModelMismatchError` (the estimator's weights come from
    ``f1``, which claims those data are impossible).  A datum outside the
    support of ``f2`` only yields ``+inf`` with the violation flag.  The
    value may legitimately be negative on finite samples.
    """
    x = np.asarray(data.values, dtype=np.float64)
    if x.size < 1:
        raise ValueError("need at least one observation")
    lp1 = log_density_vec(f1, x)
    if np.any(np.isneginf(lp1)):
        offender = float(x[np.isneginf(lp1)][0])
        raise DataModelMismatchError(
            f"datum {offender!r} lies outside the support of {f1}"
        )
    lp2 = log_density_vec(f2, x)
    if np.any(np.isneginf(lp2)):
        return KLValue(
            value=_INF,
            method="sample",
            error_bound=None,
            n_used=int(x.size),
            support_violation=True,
        )
    d = lp1 - lp2
    mean = float(d.mean())
    se = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else None
    return KLValue(value=mean, method="sample", error_bound=se, n_used=int(x.size))


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def kl_divergence(
    f1: ModelInstance,
    f2: ModelInstance,
    method: str = "auto",
    tol: float = 1e-8,
    n: int = 1_000_000,
    seed: int = 0,
) -> KLValue:
    """Divergence of ``f1`` from ``f2`` by the requested route.

    ``auto`` prefers, in order: the exact zero for identical instances, a
    registered closed form, then quadrature.  ``method`` may also name one
    of ``closed_form``, ``quadrature``, ``monte_carlo`` explicitly.
    """
    if method == "closed_form":
        out = kl_closed_form(f1, f2)
        if out is None:
            raise NoClosedFormError(
                f"no closed-form divergence for pair "
                f"{f1.family.name} -> {f2.family.name}"
            )
        return out
    if method == "quadrature":
        return kl_quadrature(f1, f2, tol=tol)
    if method == "monte_carlo":
        return kl_monte_carlo(f1, f2, n=n, seed=seed)
    if method != "auto":
        raise ValueError(
            f"unknown method {method!r}; expected auto, closed_form, "
            "quadrature or monte_carlo"
        )
    if f1 == f2:
        return KLValue(value=0.0, method="closed_form", error_bound=0.0)
    out = kl_closed_form(f1, f2)
    if out is not None:
        return out
    return kl_quadrature(f1, f2, tol=tol)
