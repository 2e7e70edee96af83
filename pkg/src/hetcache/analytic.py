"""Closed-form outage probabilities for the two-tier cached network.

Everything here is a pure function of immutable inputs. The building blocks
are the four interference kernels (Laplace-transform exponents of the
shot-noise interference), the tier cache-hit probabilities, and the
truncated-Rayleigh serving-distance densities. They combine into the
per-tier outage closed forms, the per-content total outage, and the
request-averaged outage.

Numerical conventions:
  * every ``1 - exp(-x)`` goes through ``-expm1(-x)``, so huge exponents
    saturate to 1.0 instead of overflowing;
  * success means SIR strictly above the threshold; ties have measure zero
    and count as failure in the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import (
    ContentUnreachableError,
    DegenerateNetworkError,
    DivergentIntegralError,
    DomainError,
)
from .params import CachePolicy, ContentLibrary, RequestDistribution, SystemParams, replication_probability

#: Relative tolerance of the kernel quadrature path.
KERNEL_RTOL = 1e-10


def kernel_integral(power_ratio: float, alpha: float, method: str = "auto") -> float:
    """Interference kernel x^(2/a) * integral_{x^(-2/a)}^inf du / (1 + u^(a/2)).

    ``power_ratio`` is x = gamma * p_interferer / p_server for the tier pair
    in question. For alpha == 4 the integral has the arctan closed form
    sqrt(x) * atan(sqrt(x)), used as the production path; otherwise the tail
    is removed exactly (full-line value minus a finite head integral, or a
    power transform that flattens the tail) and the remaining smooth
    finite-interval integral is evaluated adaptively to relative tolerance
    1e-10, with an analytic bracket check on the result.

    ``method`` is one of "auto", "exact" (alpha == 4 only), "quadrature".
    """
    if alpha <= 2.0:
        raise DivergentIntegralError(
            f"kernel integral diverges for alpha <= 2 (integrand tail ~ u^(-alpha/2)), got {alpha}"
        )
    if power_ratio < 0.0:
        raise DomainError(f"power ratio must be >= 0, got {power_ratio}")
    if power_ratio == 0.0:
        return 0.0

    if method == "auto":
        method = "exact" if alpha == 4.0 else "quadrature"
    if method == "exact":
        if alpha != 4.0:
            raise DomainError("exact kernel form exists only for alpha == 4")
        s = math.sqrt(power_ratio)
        return s * math.atan(s)
    if method != "quadrature":
        raise DomainError(f"unknown kernel method {method!r}")

    p = alpha / 2.0
    a = power_ratio ** (-1.0 / p)
    if a <= 1.0:
        # int_a^inf = full line - head; the head integrand is smooth on [0, a]
        full_line = (math.pi / p) / math.sin(math.pi / p)
        head, _ = integrate.quad(
            lambda u: 1.0 / (1.0 + u**p), 0.0, a, epsabs=0.0, epsrel=KERNEL_RTOL, limit=200
        )
        value = full_line - head
    else:
        # u = t^(-1/(p-1)) maps the tail onto a finite interval with a
        # smooth integrand: int_a^inf du/(1+u^p) = q * int_0^(a^(-1/q)) dt/(1+t^(p*q)),
        # q = 1/(p-1)
        q = 1.0 / (p - 1.0)
        bound = a ** (-1.0 / q)
        pq = p * q
        tail, _ = integrate.quad(
            lambda t: 1.0 / (1.0 + t**pq), 0.0, bound, epsabs=0.0, epsrel=KERNEL_RTOL, limit=200
        )
        value = q * tail
    # Analytic bracket: u^(-p)/(1 + a^(-p)) <= 1/(1 + u^p) <= u^(-p) on [a, inf).
    upper = a ** (1.0 - p) / (p - 1.0)
    lower = upper / (1.0 + a ** (-p))
    if not lower * (1.0 - 1e-8) <= value <= upper * (1.0 + 1e-8):
        raise ArithmeticError(
            f"kernel quadrature escaped its analytic bracket: value={value}, "
            f"bracket=[{lower}, {upper}]"
        )
    return power_ratio ** (1.0 / p) * value


@dataclass(frozen=True)
class InterferenceKernels:
    """The four interference kernels, by (server tier, interferer tier).

    k1: SBS server, MBS interferers;  k2: SBS server, SBS interferers;
    k3: MBS server, MBS interferers;  k4: MBS server, SBS interferers.
    k2 == k3 because both reduce to the equal-power kernel at ratio gamma.
    All four coincide when the per-channel powers are equal.
    """

    k1: float
    k2: float
    k3: float
    k4: float


def kernels(params: SystemParams, method: str = "auto") -> InterferenceKernels:
    """Evaluate all four kernels for a parameter set."""
    gamma = params.gamma
    p_m = params.p_mbs
    p_s = params.p_sbs  # raises if beta * B == 0
    k1 = kernel_integral(gamma * p_m / p_s, params.alpha, method)
    k2 = kernel_integral(gamma, params.alpha, method)
    k4 = kernel_integral(gamma * p_s / p_m, params.alpha, method)
    return InterferenceKernels(k1=k1, k2=k2, k3=k2, k4=k4)


def sbs_hit_probability(params: SystemParams, p_c: float) -> float:
    """Probability that some SBS holding the content sits within r_sbs.

    1 - exp(-beta * B * lambda_sbs * P_c * pi * r_sbs^2); zero arguments
    yield 0 rather than an error.
    """
    nu = params.beta * params.subchannels_b * params.lambda_sbs * p_c
    return -math.expm1(-nu * math.pi * params.r_sbs**2)


def mbs_hit_probability(params: SystemParams) -> float:
    """Probability that some MBS sits within r_mbs (MBSs hold everything)."""
    return -math.expm1(-params.lambda_mbs * math.pi * params.r_mbs**2)


def serving_distance_pdf_sbs(params: SystemParams, p_c: float, r: float) -> float:
    """Density of the distance to the nearest content-holding SBS.

    Truncated Rayleigh on [0, r_sbs], conditioned on the content existing
    within r_sbs; requires beta * P_c > 0.
    """
    nu = _sbs_serving_density(params, p_c)
    if not 0.0 <= r <= params.r_sbs:
        raise DomainError(f"r must lie in [0, {params.r_sbs}], got {r}")
    return _truncated_rayleigh_pdf(nu, params.r_sbs, r)


def serving_distance_cdf_sbs(params: SystemParams, p_c: float, r: float) -> float:
    """Distribution function matching :func:`serving_distance_pdf_sbs`."""
    nu = _sbs_serving_density(params, p_c)
    if not 0.0 <= r <= params.r_sbs:
        raise DomainError(f"r must lie in [0, {params.r_sbs}], got {r}")
    return math.expm1(-nu * math.pi * r**2) / math.expm1(-nu * math.pi * params.r_sbs**2)


def serving_distance_pdf_mbs(params: SystemParams, r: float) -> float:
    """Density of the distance to the nearest MBS, truncated at r_mbs."""
    if params.lambda_mbs <= 0.0:
        raise DegenerateNetworkError("serving-distance density undefined for lambda_mbs == 0")
    if not 0.0 <= r <= params.r_mbs:
        raise DomainError(f"r must lie in [0, {params.r_mbs}], got {r}")
    return _truncated_rayleigh_pdf(params.lambda_mbs, params.r_mbs, r)


def _sbs_serving_density(params: SystemParams, p_c: float) -> float:
    if not 0.0 <= p_c <= 1.0:
        raise DomainError(f"replication probability must lie in [0, 1], got {p_c}")
    if params.beta * p_c == 0.0:
        raise ContentUnreachableError(
            "no SBS can hold the content: beta * P_c == 0 (the distance law requires beta * P_c > 0)"
        )
    return params.beta * params.subchannels_b * params.lambda_sbs * p_c


def _truncated_rayleigh_pdf(density: float, radius: float, r: float) -> float:
    norm = -math.expm1(-density * math.pi * radius**2)
    if norm <= 0.0:
        raise DegenerateNetworkError("empty serving process: truncated density undefined")
    return 2.0 * math.pi * density * r * math.exp(-density * math.pi * r**2) / norm


def _success_ratio(c_dens: float, d_dens: float, area: float) -> float:
    """c * (1 - e^(-area*d)) / (d * (1 - e^(-area*c))) for 0 < c <= d."""
    num = c_dens * -math.expm1(-area * d_dens)
    den = d_dens * -math.expm1(-area * c_dens)
    return num / den


def _check_probability(value: float, label: str) -> float:
    # Assertion, not a silent clamp: anything beyond float jitter is a bug.
    if not -1e-12 <= value <= 1.0 + 1e-12:
        raise ArithmeticError(f"{label} outside [0, 1]: {value}")
    return min(max(value, 0.0), 1.0)


def outage_sbs(params: SystemParams, p_c: float) -> float:
    """Outage probability of a content served by an SBS within r_sbs.

    Closed form of the distance-averaged failure probability
    integral_0^{r_sbs} [1 - L_sbs(gamma r^alpha / p_sbs)] f(r) dr with the
    truncated-Rayleigh serving density f:

        1 - beta*B*P_c*lam_s * (1 - e^(-pi r^2 D)) /
            (D * (1 - e^(-beta*B*lam_s*P_c*pi*r^2)))

    where D = k1*lam_m + (k2 + P_c*B)*beta*lam_s.
    """
    nu = _sbs_serving_density(params, p_c)  # beta*B*lam_s*P_c
    ks = kernels(params)
    d_dens = ks.k1 * params.lambda_mbs + (ks.k2 + p_c * params.subchannels_b) * params.beta * params.lambda_sbs
    if d_dens <= 0.0 or nu <= 0.0:
        raise DegenerateNetworkError("outage undefined: all node densities are zero")
    succ = _success_ratio(nu, d_dens, math.pi * params.r_sbs**2)
    return _check_probability(1.0 - succ, "SBS outage")


def outage_mbs(params: SystemParams) -> float:
    """Outage probability of a content served by an MBS within r_mbs.

    Same structure as the SBS form with the MBS serving density and
    D = lam_m * (k3 + 1) + beta * lam_s * k4; identical for every content
    because MBSs hold the whole library.
    """
    if params.lambda_mbs <= 0.0:
        raise DegenerateNetworkError("MBS outage undefined for lambda_mbs == 0")
    ks = kernels(params)
    d_dens = params.lambda_mbs * (ks.k3 + 1.0) + params.beta * params.lambda_sbs * ks.k4
    succ = _success_ratio(params.lambda_mbs, d_dens, math.pi * params.r_mbs**2)
    return _check_probability(1.0 - succ, "MBS outage")


@dataclass(frozen=True)
class OutageBreakdown:
    """Hit probabilities, per-tier outage, and their total combination.

    When a tier can never serve (hit probability 0) its outage value is
    stored as 1.0 and carries zero weight in the total.
    """

    p_hit_sbs: float
    p_hit_mbs: float
    p_out_sbs: float
    p_out_mbs: float
    p_out_total: float


def combine_outage(p_hit_sbs: float, p_hit_mbs: float, p_out_sbs: float, p_out_mbs: float) -> float:
    """Total outage mixture over the serving tiers.

    hit_sbs * out_sbs + (1 - hit_sbs) * (hit_mbs * out_mbs + (1 - hit_mbs)).
    """
    return p_hit_sbs * p_out_sbs + (1.0 - p_hit_sbs) * (
        p_hit_mbs * p_out_mbs + (1.0 - p_hit_mbs)
    )


def total_outage(params: SystemParams, p_c: float) -> OutageBreakdown:
    """Per-content outage breakdown.

    The SBS branch is undefined when beta * P_c == 0; the mixture gives it
    zero weight there, so the stored SBS outage of 1.0 is irrelevant rather
    than an error. Same routing for a vanishing MBS tier.
    """
    hit_s = sbs_hit_probability(params, p_c)
    hit_m = mbs_hit_probability(params)
    out_s = outage_sbs(params, p_c) if hit_s > 0.0 else 1.0
    out_m = outage_mbs(params) if hit_m > 0.0 else 1.0
    total = combine_outage(hit_s, hit_m, out_s, out_m)
    return OutageBreakdown(
        p_hit_sbs=hit_s,
        p_hit_mbs=hit_m,
        p_out_sbs=out_s,
        p_out_mbs=out_m,
        p_out_total=_check_probability(total, "total outage"),
    )


def average_outage(
    params: SystemParams,
    policy: CachePolicy,
    library: ContentLibrary,
    requests: RequestDistribution,
) -> float:
    """Request-averaged outage sum_c q_c * total_outage(P_c).

    Evaluated as the plain |C|-term sum in rank order; distinct P_c values
    are memoized, which leaves the sum bitwise unchanged.
    """
    if requests.size != library.size:
        raise DomainError(
            f"request distribution size {requests.size} does not match library size {library.size}"
        )
    cache: dict[float, float] = {}
    acc = 0.0
    for c in range(1, library.size + 1):
        p_c = replication_probability(policy, c, library)
        if p_c not in cache:
            cache[p_c] = total_outage(params, p_c).p_out_total
        acc += requests.weights[c - 1] * cache[p_c]
    return _check_probability(acc, "average outage")
