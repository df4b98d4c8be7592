"""Photon-counting target detection with correlated beams.

A source emits pairs of beams into ``modes`` temporal modes per pixel.  The
reference beam is detected directly; the probe beam is reflected by the
object (a 50:50 beam splitter) onto a detector that also collects a
multithermal background.  Presence of the object is inferred from the
sample covariance of the two counts over many pixel pairs.

Quantum source: each mode holds a twin-beam pair, so both beams carry the
same photon number ``n`` (geometric with mean ``mu``); summed over modes it
is negative binomial.  Classical source: a multithermal beam with the same
number of modes and twice the mean, split 50:50, so each arm has exactly
the quantum marginal.  Losses are binomial thinning.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from . import gaussian_core as gc
from .estimation import maximize_scalar
from .moments import number_stats

__all__ = [
    "IlluminationConfig",
    "DiscriminationResult",
    "sample_counts",
    "covariance_statistic",
    "error_probability",
    "analytic_moments",
    "bootstrap_log10_error",
    "advantage_sweep",
]

SOURCES = ("twb", "classical")
OBJECT_REFLECTIVITY = 0.5


@dataclass(frozen=True)
class IlluminationConfig:
    """Parameters of one illumination experiment.

    Attributes
    ----------
    source : {"twb", "classical"}
    mu : float
        Mean photons per mode in each beam.
    modes : int
        Temporal modes bundled per pixel.
    n_b : float
        Mean background photons per pixel.
    m_b : int
        Background modes per pixel.
    eta : float
        Detection efficiency of both detectors.
    pixels : int
        Pixel pairs ``M`` entering one covariance estimate.
    object_present : bool
    seed : int
    """

    source: str = "twb"
    mu: float = 0.075
    modes: int = 1000
    n_b: float = 1.0
    m_b: int = 1300
    eta: float = 0.8
    pixels: int = 10_000
    object_present: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.n_b < 0:
            raise ValueError("n_b must be non-negative")
        if int(self.m_b) != self.m_b or self.m_b < 1:
            raise ValueError("m_b must be a positive integer")
        if int(self.modes) != self.modes or self.modes < 1:
            raise ValueError("modes must be a positive integer")
        if self.pixels < 2:
            raise ValueError("need at least two pixel pairs")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")


def _multithermal(rng, modes: int, mean_total: float, size):
    """Photon counts of ``modes`` thermal modes with total mean ``mean_total``."""
    if mean_total == 0:
        return np.zeros(size, dtype=np.int64)
    p = 1.0 / (1.0 + mean_total / modes)
    return rng.negative_binomial(modes, p, size=size)


def sample_counts(config: IlluminationConfig, rng=None, trials: int | None = None):
    """Detected counts ``(n_ref, n_probe)`` for every pixel pair.

    Returns arrays of shape ``(pixels,)``, or ``(trials, pixels)`` when
    ``trials`` is given.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    size = (config.pixels,) if trials is None else (trials, config.pixels)
    t, mu, eta = config.modes, config.mu, config.eta
    if config.source == "twb":
        n = _multithermal(rng, t, t * mu, size)
        ref_in, probe_in = n, n
    else:
        n = _multithermal(rng, t, 2 * t * mu, size)
        ref_in = rng.binomial(n, 0.5)
        probe_in = n - ref_in
    n_ref = rng.binomial(ref_in, eta)
    reflected = rng.binomial(probe_in, eta * OBJECT_REFLECTIVITY)
    # background last, so configurations differing only in background share
    # every source draw under a common seed
    background = rng.binomial(_multithermal(rng, config.m_b, config.n_b, size), eta)
    n_probe = reflected + background if config.object_present else background
    return n_ref, n_probe


def covariance_statistic(n1, n2) -> np.ndarray:
    """``<N1 N2> - <N1><N2>`` over the last axis (population normalisation)."""
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    if n1.shape[-1] < 2:
        raise ValueError("need at least two samples")
    return (n1 * n2).mean(axis=-1) - n1.mean(axis=-1) * n2.mean(axis=-1)


def analytic_moments(config: IlluminationConfig) -> dict:
    """Means, variances and covariance of ``(n_ref, n_probe)`` from the moments engine."""
    t, eta = config.modes, config.eta
    r_obj = OBJECT_REFLECTIVITY if config.object_present else 0.0
    if config.source == "twb":
        state = gc.twin_beam(config.mu)
    else:
        state = gc.apply(gc.beam_splitter(np.pi / 4), gc.tensor(gc.thermal(2 * config.mu), gc.vacuum()), [0, 1])
    state = gc.apply_loss(eta, state, [0])
    state = gc.apply_loss(eta * r_obj, state, [1])
    src = number_stats(state, pairs=[(0, 1)])
    bg = number_stats(gc.apply_loss(eta, gc.thermal(config.n_b / config.m_b)))
    return {
        "mean_ref": t * src.means[0],
        "mean_probe": t * src.means[1] + config.m_b * bg.means[0],
        "var_ref": t * src.variances[0],
        "var_probe": t * src.variances[1] + config.m_b * bg.variances[0],
        "cov": t * src.covariances[(0, 1)],
    }


@dataclass(frozen=True)
class DiscriminationResult:
    """Covariance samples under both hypotheses and the Gaussian decision rule.

    Attributes
    ----------
    delta_in, delta_out : ndarray
        Covariance estimates with the object present and absent.
    fit_in, fit_out : tuple of float
        Gaussian ``(mean, std)`` fitted to each sample.
    threshold : float
        Covariance above which the object is declared present.
    log_p_err : float
        Natural log of the minimised error probability.
    """

    delta_in: np.ndarray
    delta_out: np.ndarray
    fit_in: tuple
    fit_out: tuple
    threshold: float
    log_p_err: float

    @property
    def p_err(self) -> float:
        return float(np.exp(self.log_p_err))

    @property
    def log10_p_err(self) -> float:
        return float(self.log_p_err / np.log(10))


def _log_error(t, fit_in, fit_out):
    (m_in, s_in), (m_out, s_out) = fit_in, fit_out
    # false alarm: Delta > t given absent; miss: Delta < t given present
    return np.log(0.5) + np.logaddexp(
        stats.norm.logsf(t, m_out, s_out), stats.norm.logcdf(t, m_in, s_in)
    )


def decide(delta_in, delta_out) -> tuple[float, float, tuple, tuple]:
    """Fit Gaussians and minimise the error probability over the threshold."""
    delta_in = np.asarray(delta_in, dtype=float)
    delta_out = np.asarray(delta_out, dtype=float)
    fit_in = (float(delta_in.mean()), float(delta_in.std()))
    fit_out = (float(delta_out.mean()), float(delta_out.std()))
    if fit_in[1] == 0 or fit_out[1] == 0:
        raise ValueError("degenerate covariance distribution")
    if np.isclose(fit_in[0], fit_out[0], rtol=0, atol=1e-12) and np.isclose(fit_in[1], fit_out[1]):
        raise ValueError("hypotheses are indistinguishable")
    if fit_in[0] < fit_out[0]:
        # reversed ordering: declare present below the threshold
        fit_in, fit_out = (-fit_in[0], fit_in[1]), (-fit_out[0], fit_out[1])
        sign = -1.0
    else:
        sign = 1.0
    lo = min(fit_out[0], fit_in[0]) - 1e-9
    hi = max(fit_out[0], fit_in[0]) + 1e-9
    t, neg = maximize_scalar(lambda x: -_log_error(x, fit_in, fit_out), (lo, hi))
    return sign * float(t), float(-neg), fit_in, fit_out


def error_probability(config: IlluminationConfig, trials: int = 200) -> DiscriminationResult:
    """Monte Carlo discrimination of object presence for one configuration."""
    if trials < 100:
        raise ValueError("need at least 100 trials per hypothesis")
    seq_in, seq_out = np.random.SeedSequence(config.seed).spawn(2)
    n1, n2 = sample_counts(replace(config, object_present=True), np.random.default_rng(seq_in), trials)
    d_in = covariance_statistic(n1, n2)
    n1, n2 = sample_counts(replace(config, object_present=False), np.random.default_rng(seq_out), trials)
    d_out = covariance_statistic(n1, n2)
    threshold, log_p, _, _ = decide(d_in, d_out)
    fit_in = (float(d_in.mean()), float(d_in.std()))
    fit_out = (float(d_out.mean()), float(d_out.std()))
    return DiscriminationResult(d_in, d_out, fit_in, fit_out, threshold, log_p)


def bootstrap_log10_error(result: DiscriminationResult, resamples: int = 200, seed: int = 0) -> float:
    """Bootstrap standard deviation of ``log10 P_err`` over the trials."""
    rng = np.random.default_rng(seed)
    n_in, n_out = result.delta_in.size, result.delta_out.size
    vals = np.empty(resamples)
    for k in range(resamples):
        d_in = result.delta_in[rng.integers(0, n_in, n_in)]
        d_out = result.delta_out[rng.integers(0, n_out, n_out)]
        vals[k] = decide(d_in, d_out)[1] / np.log(10)
    return float(vals.std(ddof=1))


@dataclass(frozen=True)
class SweepResult:
    """Error probabilities over a background grid for both sources.

    ``results[(source, m_b, n_b)]`` holds a ``DiscriminationResult``.  All
    entries share trial seeds, so trial ``k`` uses the same source photons
    everywhere and differences can be bootstrapped pairwise.
    """

    n_b_grid: tuple
    m_b_values: tuple
    results: dict

    def log10_gap(self, m_b, idx=None) -> np.ndarray:
        """``log10 P_err^classical - log10 P_err^quantum`` per ``n_b``."""
        out = []
        for n_b in self.n_b_grid:
            q, c = self.results[("twb", m_b, n_b)], self.results[("classical", m_b, n_b)]
            if idx is None:
                out.append(c.log10_p_err - q.log10_p_err)
            else:
                out.append(_resampled_log10(c, idx) - _resampled_log10(q, idx))
        return np.array(out)

    def bootstrap(self, statistic, resamples: int = 200, seed: int = 0) -> np.ndarray:
        """Paired bootstrap of ``statistic(self, idx)`` over trial indices."""
        any_result = next(iter(self.results.values()))
        n = any_result.delta_in.size
        rng = np.random.default_rng(seed)
        return np.array([statistic(self, rng.integers(0, n, n)) for _ in range(resamples)])


    def gap_difference(self, m_hi: int, m_lo: int, resamples: int = 100, seed: int = 0) -> dict:
        """Does the quantum advantage grow from ``m_lo`` to ``m_hi`` background modes?

        Per ``n_b`` the difference of log10 gaps is bootstrapped pairwise; the
        points are pooled with inverse-variance weights.  Returns the pooled
        difference, its bootstrap std, and the per-point values and stds.
        """
        point = self.log10_gap(m_hi) - self.log10_gap(m_lo)
        boots = self.bootstrap(
            lambda s, idx: s.log10_gap(m_hi, idx) - s.log10_gap(m_lo, idx), resamples, seed
        )
        sd = boots.std(axis=0, ddof=1)
        w = 1.0 / np.maximum(sd, 1e-12) ** 2
        w = w / w.sum()
        return {
            "pooled": float(w @ point),
            "pooled_std": float((boots @ w).std(ddof=1)),
            "per_point": point,
            "per_point_std": sd,
        }


def _resampled_log10(result: DiscriminationResult, idx) -> float:
    return decide(result.delta_in[idx], result.delta_out[idx])[1] / np.log(10)


def advantage_sweep(base: IlluminationConfig, n_b_grid, m_b_values, trials: int = 200) -> SweepResult:
    """Run ``error_probability`` for both sources over ``n_b`` and ``m_b``."""
    results = {}
    for m_b in m_b_values:
        for n_b in n_b_grid:
            for source in SOURCES:
                cfg = replace(base, source=source, m_b=int(m_b), n_b=float(n_b))
                results[(source, int(m_b), float(n_b))] = error_probability(cfg, trials)
    return SweepResult(tuple(float(x) for x in n_b_grid), tuple(int(m) for m in m_b_values), results)
