"""Seeded generators for the processes used in the experiments.

Everything is driven by a single uniform variable per time step: a
quantile autoregression draws u_t ~ U(0,1) and sets
y_t = c_0(u_t) + c_1(u_t) y_{t-1} + ... + c_p(u_t) y_{t-p}.
Piecewise presets splice regimes with lag continuity: the first lags of
a new regime are the last values of the previous one.  Stochastic
volatility presets use a latent log-variance AR(1) instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .core import TimeSeries

_OVERFLOW_LIMIT = 1e12
DEFAULT_BURN_IN = 200

CoefficientFn = Callable[[float], float]


def asymmetric_laplace_ppf(q, tau: float):
    """Inverse CDF of the distribution with density tau*(1-tau)*exp(-rho_tau(u)).

    The tau-quantile of this distribution is 0, its CDF at 0 is tau.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau={tau} outside (0, 1)")
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        lower = np.log(q / tau) / (1.0 - tau)
        upper = -np.log((1.0 - q) / (1.0 - tau)) / tau
    out = np.where(q < tau, lower, upper)
    return float(out) if out.ndim == 0 else out


def sample_asymmetric_laplace(tau: float, rng: np.random.Generator, size=None):
    """Draw from the asymmetric Laplace distribution with parameter tau."""
    return asymmetric_laplace_ppf(rng.uniform(size=size), tau)


def laplace_ppf(q):
    """Inverse CDF of the standard symmetric Laplace with rate 1."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(q < 0.5, np.log(2.0 * q), -np.log(2.0 * (1.0 - q)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QarSpec:
    """A quantile autoregression: one coefficient function per lag (0..p)."""

    coefficients: tuple[CoefficientFn, ...]
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("need at least the level coefficient function")
        if self.burn_in < 0:
            raise ValueError("burn_in cannot be negative")

    @property
    def p(self) -> int:
        return len(self.coefficients) - 1

    def step(self, u: float, lags: Sequence[float]) -> float:
        """One transition: lags[j] is y_{t-1-j}."""
        y = self.coefficients[0](u)
        for j in range(1, len(self.coefficients)):
            y += self.coefficients[j](u) * lags[j - 1]
        return y


def _drive(specs, lengths, rng, burn_in, start_lags=None):
    """Run QAR regimes back to back, burning in only before the first."""
    max_p = max(spec.p for spec in specs)
    lag_buf = [0.0] * max(max_p, 1)
    if start_lags is not None:
        for j, v in enumerate(start_lags[: len(lag_buf)]):
            lag_buf[j] = v
    out = []
    for t in range(burn_in):
        y = specs[0].step(rng.uniform(), lag_buf)
        if abs(y) > _OVERFLOW_LIMIT:
            raise ArithmeticError(f"simulated value exceeded {_OVERFLOW_LIMIT:g} at burn-in step {t + 1}")
        lag_buf = [y] + lag_buf[:-1]
    t_global = 0
    for spec, length in zip(specs, lengths):
        for _ in range(length):
            t_global += 1
            y = spec.step(rng.uniform(), lag_buf)
            if abs(y) > _OVERFLOW_LIMIT:
                raise ArithmeticError(f"simulated value exceeded {_OVERFLOW_LIMIT:g} at t={t_global}")
            out.append(y)
            lag_buf = [y] + lag_buf[:-1]
    return np.array(out)


def simulate_qar(spec: QarSpec, n: int, rng: np.random.Generator) -> TimeSeries:
    """Simulate n observations of a single stationary-regime QAR."""
    if n < 1:
        raise ValueError("n must be positive")
    return TimeSeries(_drive([spec], [n], rng, spec.burn_in))


def _const(c: float) -> CoefficientFn:
    return lambda u: c


def _poly(*coeffs: float) -> CoefficientFn:
    """Polynomial in u with coefficients given from degree 0 upwards."""
    def f(u: float) -> float:
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * u + c
        return acc

    return f


# Piecewise AR(2), three regimes, breaks at n/2 and 3n/4, standard normal noise.
_SIM1_COEFFS = ((0.5, 0.3), (-0.5, -0.7), (1.3, -0.5))

# Treasury-bill QAR(2): cubic polynomials in u for level and both lags.
TBILL_COEFFS = (
    (-0.0144, 0.2264, -0.5448, 0.3848),
    (1.3721, -0.9635, 1.5312, -0.6939),
    (-0.4394, 1.3154, -2.1945, 1.1353),
)

PRESET_NAMES = ("sim1", "sim2", "sim3", "sim4", "svmA", "svmB", "tbill")


@dataclass(frozen=True)
class PresetRealization:
    """A simulated series together with its generative ground truth."""

    preset: str
    series: TimeSeries
    true_breaks: tuple[int, ...]
    segments: tuple[str, ...]

    @property
    def true_m(self) -> int:
        return len(self.true_breaks)

    @property
    def true_lambdas(self) -> tuple[float, ...]:
        return tuple(k / self.series.n for k in self.true_breaks)


def _sim1(n, rng):
    k1, k2 = n // 2, (3 * n) // 4
    specs = [
        QarSpec((ndtri, _const(a1), _const(a2))) for a1, a2 in _SIM1_COEFFS
    ]
    values = _drive(specs, [k1, k2 - k1, n - k2], rng, DEFAULT_BURN_IN)
    return values, (k1, k2), tuple(
        f"AR(2) coefficients ({a1}, {a2}), standard normal noise" for a1, a2 in _SIM1_COEFFS
    )


def _sim2(n, rng):
    spec = QarSpec((ndtri, _poly(0.85, 0.25)))
    return _drive([spec], [n], rng, DEFAULT_BURN_IN), (), ("QAR(1), lag coefficient 0.85 + 0.25u",)


def asymmetric_laplace_mean(tau: float) -> float:
    """E[U] for the asymmetric Laplace with parameter tau."""
    return (1.0 - 2.0 * tau) / (tau * (1.0 - tau))


def _sim3(n, rng):
    # innovations are mean-centered: an uncentered AL(0.4) -> AL(0.6) switch
    # would add a large level shift detectable at every quantile, which is not
    # the shape-change-only regime this preset exercises
    k1 = n // 2
    piece1 = QarSpec((
        lambda u: asymmetric_laplace_ppf(u, 0.4) - asymmetric_laplace_mean(0.4),
        lambda u: 0.5 if u <= 0.2 else 0.8,
    ))
    piece2 = QarSpec((
        lambda u: asymmetric_laplace_ppf(u, 0.6) - asymmetric_laplace_mean(0.6),
        _const(0.5),
    ))
    values = _drive([piece1, piece2], [k1, n - k1], rng, DEFAULT_BURN_IN)
    return values, (k1,), (
        "AR(1) coefficient 0.5 below the 0.2 quantile, 0.8 above; centered AL(0.4) noise",
        "AR(1) coefficient 0.5; centered AL(0.6) noise",
    )


def _sim4(n, rng):
    k1 = n // 2
    piece1 = QarSpec((ndtri, _poly(0.2, 0.1), _poly(0.5, 0.1)))
    piece2 = QarSpec((laplace_ppf, _poly(0.0, 0.7)))
    values = _drive([piece1, piece2], [k1, n - k1], rng, DEFAULT_BURN_IN)
    return values, (k1,), (
        "QAR(2), coefficients (0.2+0.1u, 0.5+0.1u), standard normal noise",
        "QAR(1), coefficient 0.7u, standard Laplace noise",
    )


def _svm(n, rng, pieces, eta_sds, xi_sds):
    """y_t = exp(alpha_t/2) * xi_t with alpha_t = gamma + phi*alpha_{t-1} + eta_t."""
    k1 = n // 2
    (g1, phi1), (g2, phi2) = pieces
    alpha = g1 / (1.0 - phi1) if phi1 < 1.0 else g1
    out = np.empty(n)
    for t in range(n):
        gamma, phi = (g1, phi1) if t < k1 else (g2, phi2)
        eta_sd = eta_sds[0] if t < k1 else eta_sds[1]
        xi_sd = xi_sds[0] if t < k1 else xi_sds[1]
        alpha = gamma + phi * alpha + eta_sd * rng.standard_normal()
        out[t] = np.exp(alpha / 2.0) * xi_sd * rng.standard_normal()
    return out, (k1,)


def _svm_a(n, rng):
    values, breaks = _svm(
        n,
        rng,
        pieces=((-0.8106703, 0.90), (-0.3738736, 0.95)),
        eta_sds=(np.sqrt(0.45560010), np.sqrt(0.06758185)),
        xi_sds=(1.0, 1.0),
    )
    return values, breaks, (
        "SV: gamma=-0.8106703, phi=0.90, var(eta)=0.45560010",
        "SV: gamma=-0.3738736, phi=0.95, var(eta)=0.06758185",
    )


def _svm_b(n, rng):
    values, breaks = _svm(
        n,
        rng,
        pieces=((-0.8106703, 0.0), (-0.3738736, 0.0)),
        eta_sds=(np.sqrt(0.5), np.sqrt(0.5)),
        xi_sds=(1.0, 2.0),
    )
    return values, breaks, (
        "SV: gamma=-0.8106703, phi=0, var(xi)=1",
        "SV: gamma=-0.3738736, phi=0, var(xi)=4",
    )


def _tbill(n, rng):
    spec = QarSpec(tuple(_poly(*c) for c in TBILL_COEFFS))
    return _drive([spec], [n], rng, DEFAULT_BURN_IN), (), (
        "QAR(2) with cubic coefficient polynomials (treasury-bill fit)",
    )


_PRESETS = {
    "sim1": _sim1,
    "sim2": _sim2,
    "sim3": _sim3,
    "sim4": _sim4,
    "svmA": _svm_a,
    "svmB": _svm_b,
    "tbill": _tbill,
}


def simulate_preset(preset: str, n: int, rng: np.random.Generator) -> PresetRealization:
    """Simulate a named process and return it with its true break metadata."""
    if preset not in _PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESET_NAMES}")
    if n < 1:
        raise ValueError("n must be positive")
    values, breaks, segments = _PRESETS[preset](n, rng)
    return PresetRealization(
        preset=preset, series=TimeSeries(values), true_breaks=breaks, segments=segments
    )
