"""Closed-form results for a linear classifier on two separated Gaussian classes.

Data model: two classes y = ±1 with equal prior, x | y ~ N(y·Δ·t, I_p) for a
unit vector t.  A unit-norm weight vector w classifies by sign(wᵀx) and its
risk depends only on the angle θ between w and t:

    R(w) = Φ(−Δ·cos θ)

The minimum achievable risk is R_min = Φ(−Δ) > 0 whenever Δ < ∞, so the
classifier can never be exact, only approached.  Because uniformly random
unit vectors have an angle density ∝ sin^{p−2}θ, the distribution of risks
and hence the risk entropy s(r) = log ρ(r) have closed forms, as do the
Boltzmann-weighted mean risk and the learning curve of the Hebbian rule
w ∝ Σ_k y_k x_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import betaln, ndtr, ndtri

from .errors import DomainError, QuadratureError
from .rng import as_generator, stream

__all__ = [
    "GaussianClassSpec",
    "RiskEntropyPoint",
    "perceptron_risk",
    "angle_density",
    "risk_entropy",
    "risk_entropy_per_feature_limit",
    "risk_density",
    "boltzmann_risk_exact",
    "hebbian_expected_risk",
    "hebbian_asymptote",
    "hebbian_simulate",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianClassSpec:
    """Two isotropic Gaussian classes in R^p with means ±delta·t, ‖t‖=1."""

    p: int
    delta: float
    t: np.ndarray = None

    def __post_init__(self):
        if self.p < 2:
            raise DomainError(f"feature dimension must be >= 2, got {self.p}")
        if self.delta < 0:
            raise DomainError(f"class separation must be >= 0, got {self.delta}")
        t = self.t
        if t is None:
            t = np.zeros(self.p)
            t[0] = 1.0
        t = np.asarray(t, dtype=float)
        if t.shape != (self.p,):
            raise DomainError(f"target direction has shape {t.shape}, expected ({self.p},)")
        if abs(np.linalg.norm(t) - 1.0) > 1e-12:
            raise DomainError("target direction must be unit norm within 1e-12")
        object.__setattr__(self, "t", t)

    @property
    def r_min(self) -> float:
        """Minimum achievable risk Φ(−Δ)."""
        return float(ndtr(-self.delta))


@dataclass(frozen=True)
class RiskEntropyPoint:
    """A point (r, s) on a risk-entropy curve; s is defined up to a constant."""

    r: float
    s: float


def perceptron_risk(theta: float, delta: float) -> float:
    """Risk Φ(−Δ·cos θ) of a unit weight vector at angle θ to the target."""
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"angle must lie in [0, pi], got {theta}")
    if delta < 0:
        raise DomainError(f"separation must be >= 0, got {delta}")
    return float(ndtr(-delta * math.cos(theta)))


def angle_density(theta: float, p: int) -> float:
    """Density sin^{p−2}θ / B(1/2, (p−1)/2) of the angle between random directions in R^p."""
    if p < 2:
        raise DomainError(f"dimension must be >= 2, got {p}")
    lognorm = betaln(0.5, 0.5 * (p - 1))
    s = math.sin(theta)
    if s <= 0.0:
        return 0.0 if p > 2 else float(np.exp(-lognorm))
    return float(np.exp((p - 2) * math.log(s) - lognorm))


def _inv_arg(r: float, spec: GaussianClassSpec) -> float:
    """Φ⁻¹(r), restricted to the achievable band |Φ⁻¹(r)| < Δ."""
    if not 0.0 < r < 1.0:
        raise DomainError(f"risk must lie in (0, 1), got {r}")
    x = float(ndtri(r))
    if abs(x) >= spec.delta:
        raise DomainError(
            f"risk {r} outside achievable range ({spec.r_min}, {1 - spec.r_min}) for delta={spec.delta}"
        )
    return x


def risk_entropy(r: float, spec: GaussianClassSpec) -> float:
    """Risk entropy s(r) = ((p−3)/2)·log(1 − (Φ⁻¹(r)/Δ)²) + Φ⁻¹(r)²/2, up to a constant."""
    x = _inv_arg(r, spec)
    u = x / spec.delta
    return float(0.5 * (spec.p - 3) * np.log1p(-u * u) + 0.5 * x * x)


def risk_entropy_per_feature_limit(r: float, spec: GaussianClassSpec) -> float:
    """Large-p limit of s(r)/p, which is (1/2)·log(1 − (Φ⁻¹(r)/Δ)²)."""
    x = _inv_arg(r, spec)
    u = x / spec.delta
    return float(0.5 * np.log1p(-u * u))


def risk_density(r: float, spec: GaussianClassSpec) -> float:
    """Full risk density ρ(r) including the √(2π)/(Δ·B(1/2,(p−1)/2)) prefactor."""
    x = _inv_arg(r, spec)
    u = x / spec.delta
    logrho = (
        math.log(_SQRT2PI)
        - math.log(spec.delta)
        - betaln(0.5, 0.5 * (spec.p - 1))
        + 0.5 * (spec.p - 3) * np.log1p(-u * u)
        + 0.5 * x * x
    )
    return float(np.exp(logrho))


def _boltzmann_log_weight(theta, beta, spec):
    # log of e^{-beta R(theta)} sin^{p-2}(theta); -inf at the endpoints for p > 2
    risk = ndtr(-spec.delta * np.cos(theta))
    out = -beta * risk
    if spec.p > 2:
        s = np.sin(theta)
        with np.errstate(divide="ignore"):
            out = out + (spec.p - 2) * np.log(s)
    return out


def boltzmann_risk_exact(beta: float, spec: GaussianClassSpec, rel_tol: float = 1e-8) -> float:
    """Expected risk under the Boltzmann weight e^{−β·R} over uniform directions.

    Evaluates ∫ R(θ) e^{−βR(θ)} sin^{p−2}θ dθ / ∫ e^{−βR(θ)} sin^{p−2}θ dθ on
    [0, π] by adaptive quadrature.  The largest log-weight is subtracted from
    the exponent first, which keeps the integrand in range up to β ≈ 1e4.
    """
    if beta < 0:
        raise DomainError(f"inverse temperature must be >= 0, got {beta}")
    peak = optimize.minimize_scalar(
        lambda th: -_boltzmann_log_weight(th, beta, spec),
        bounds=(0.0, math.pi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    theta_star = float(peak.x)
    log_max = _boltzmann_log_weight(theta_star, beta, spec)

    def weight(th):
        return np.exp(_boltzmann_log_weight(th, beta, spec) - log_max)

    def risk_weight(th):
        return ndtr(-spec.delta * np.cos(th)) * weight(th)

    den, den_err = integrate.quad(
        weight, 0.0, math.pi, points=[theta_star], epsabs=0.0, epsrel=rel_tol * 1e-2, limit=200
    )
    num, num_err = integrate.quad(
        risk_weight, 0.0, math.pi, points=[theta_star], epsabs=0.0, epsrel=rel_tol * 1e-2, limit=200
    )
    if den <= 0.0:
        raise QuadratureError("Boltzmann normalisation underflowed to zero", achieved=den_err)
    achieved = abs(den_err / den) + (abs(num_err / num) if num != 0.0 else 0.0)
    if achieved > rel_tol:
        raise QuadratureError(
            f"quadrature reached relative error {achieved:.3e} > {rel_tol:.3e}",
            achieved=achieved,
            requested=rel_tol,
        )
    return float(num / den)


def hebbian_expected_risk(m: int, spec: GaussianClassSpec) -> float:
    """Expected risk Φ(−Δ/√(1 + p/(m·Δ²))) of the Hebbian rule after m examples."""
    if m < 1:
        raise DomainError(f"sample count must be >= 1, got {m}")
    if spec.delta == 0.0:
        return 0.5
    return float(ndtr(-spec.delta / math.sqrt(1.0 + spec.p / (m * spec.delta**2))))


def hebbian_asymptote(m: int, spec: GaussianClassSpec) -> float:
    """Large-m expansion Φ(−Δ)·(1 + p/(2m)) of the Hebbian learning curve."""
    if m < 1:
        raise DomainError(f"sample count must be >= 1, got {m}")
    if spec.delta == 0.0:
        return 0.5
    return float(ndtr(-spec.delta) * (1.0 + spec.p / (2.0 * m)))


def hebbian_simulate(
    m: int, spec: GaussianClassSpec, runs: int, seed, subseed_path: tuple = ()
) -> tuple[float, float]:
    """Simulate the Hebbian rule: mean exact risk over runs and its standard error.

    Each run draws m fresh examples, forms w̄ = Σ y_k x_k and scores its
    exact risk Φ(−Δ·cos θ_w̄) from the cosine with the target; no test-set
    noise enters.  Runs use independent streams derived from ``seed`` (below
    ``subseed_path`` when several simulations share a master seed), so
    results are reproducible and order-independent.
    """
    if m < 1:
        raise DomainError(f"sample count must be >= 1, got {m}")
    if runs < 2:
        raise DomainError(f"need at least 2 runs for a standard error, got {runs}")
    if isinstance(seed, np.random.Generator):
        run_rngs = [seed] * runs
    else:
        run_rngs = [stream(seed, *subseed_path, run) for run in range(runs)]
    risks = np.empty(runs)
    for run, rng in enumerate(run_rngs):
        rng = as_generator(rng)
        signs = 2.0 * rng.integers(0, 2, size=m) - 1.0
        noise = rng.standard_normal((m, spec.p))
        # sum_k y_k x_k = m*delta*t + sum_k y_k eta_k
        w_bar = m * spec.delta * spec.t + signs @ noise
        cos_w = float(w_bar @ spec.t) / float(np.linalg.norm(w_bar))
        risks[run] = ndtr(-spec.delta * cos_w)
    mean = float(risks.mean())
    stderr = float(risks.std(ddof=1) / math.sqrt(runs))
    return mean, stderr
