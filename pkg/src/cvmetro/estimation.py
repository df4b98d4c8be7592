"""Classical and quantum Fisher information, sensitivities and scaling fits.

Phase-estimation figures of merit used throughout the package:

* ``fisher_information`` for an outcome model ``p(x|phi)``;
* ``qfi_pure_unitary``, ``H = 4 var[G]`` for a pure probe and a generator
  built from photon-number operators;
* ``sensitivity``, the error-propagation figure ``sqrt(var O) / |d<O>/dphi|``;
* ``maximize_scalar``, a coarse grid followed by golden-section refinement;
* ``fit_scaling``, a log-log power-law fit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, stats

from . import gaussian_core as gc
from .moments import weighted_number_moments

__all__ = [
    "OutcomeModel",
    "BoundReport",
    "ScalingFit",
    "StationaryPointError",
    "derivative",
    "fisher_information",
    "qfi_pure_unitary",
    "sensitivity",
    "maximize_scalar",
    "fit_scaling",
    "passive_probe",
    "qfi_passive",
    "qfi_passive_closed_form",
    "optimal_passive_qfi",
    "passive_formula_check",
]

DERIVATIVE_STEP = 1e-4


class StationaryPointError(ValueError):
    """The observable does not respond to the phase at this working point."""


def derivative(f: Callable[[float], float], x: float, h: float = DERIVATIVE_STEP) -> float:
    """Centered difference with one Richardson refinement (error ``O(h^4)``)."""
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


@dataclass(frozen=True)
class OutcomeModel:
    """Parametric family ``p(x|phi)``.

    Either ``mean`` and ``std`` (callables of ``phi``) for a Gaussian
    outcome, or ``table`` returning a discrete distribution for each ``phi``.
    """

    mean: Callable[[float], float] | None = None
    std: Callable[[float], float] | None = None
    table: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        gaussian = self.mean is not None and self.std is not None
        if gaussian == (self.table is not None):
            raise ValueError("give either (mean, std) or table")

    @property
    def is_gaussian(self) -> bool:
        return self.table is None

    def std_at(self, phi: float) -> float:
        s = float(self.std(phi))
        if not s > 0:
            raise ValueError(f"outcome std must be positive, got {s}")
        return s

    def probabilities(self, phi: float) -> np.ndarray:
        p = np.asarray(self.table(phi), dtype=float)
        if abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
            raise ValueError("outcome table is not a normalised distribution")
        return p


@dataclass(frozen=True)
class BoundReport:
    """Figures of merit evaluated for one configuration."""

    fisher: float | None = None
    qfi: float | None = None
    sensitivity: float | None = None
    exponent: float | None = None
    exponent_err: float | None = None

    def __post_init__(self):
        if self.fisher is not None and self.qfi is not None:
            if self.fisher > self.qfi + 1e-7 * max(1.0, abs(self.qfi)):
                raise ValueError(
                    f"Fisher information {self.fisher} exceeds QFI {self.qfi}"
                )


def fisher_information(model: OutcomeModel, phi: float, h: float = DERIVATIVE_STEP) -> float:
    """Fisher information of ``model`` at ``phi``.

    Gaussian models use ``m'^2/s^2 + 2 s'^2/s^2``.  Discrete tables use
    ``sum (dp)^2 / p`` with outcomes of vanishing probability excluded.
    """
    if model.is_gaussian:
        s = model.std_at(phi)
        dm = derivative(model.mean, phi, h)
        ds = derivative(model.std, phi, h)
        return float(dm**2 / s**2 + 2 * ds**2 / s**2)
    p = model.probabilities(phi)
    dp = np.stack(
        [model.probabilities(phi + k * h) for k in (1, -1, 0.5, -0.5)]
    )
    d1 = (dp[0] - dp[1]) / (2 * h)
    d2 = (dp[2] - dp[3]) / h
    dprob = (4 * d2 - d1) / 3
    keep = p > 1e-300
    if not np.all(keep | (np.abs(dprob) < 1e-300)):
        warnings.warn("excluding outcomes of vanishing probability", RuntimeWarning)
    return float(np.sum(dprob[keep] ** 2 / p[keep]))


def _generator_weights(generator, n_modes: int) -> np.ndarray:
    w = np.zeros(n_modes)
    if isinstance(generator, (int, np.integer)):
        w[int(generator)] = 1.0
    else:
        for mode, weight in dict(generator).items():
            w[int(mode)] = float(weight)
    return w


def qfi_pure_unitary(probe: gc.GaussianState, generator=0) -> float:
    """``H = 4 var[G]`` for ``exp(-i phi G)`` acting on a pure probe.

    ``generator`` is a mode index (``G = N_k``) or a mapping
    ``{mode: weight}`` for ``G = sum_k w_k N_k``.
    """
    if not probe.is_pure():
        raise ValueError("quantum Fisher information requires a pure probe")
    w = _generator_weights(generator, probe.n_modes)
    return 4.0 * weighted_number_moments(probe, w)[1]


def sensitivity(model: OutcomeModel, phi: float, h: float = DERIVATIVE_STEP) -> float:
    """Error-propagation sensitivity ``s(phi) / |m'(phi)|``."""
    if not model.is_gaussian:
        raise ValueError("sensitivity needs an analytic mean and std")
    dm = derivative(model.mean, phi, h)
    if abs(dm) < 1e-14:
        raise StationaryPointError(f"d<O>/dphi vanishes at phi={phi}")
    return model.std_at(phi) / abs(dm)


def maximize_scalar(
    f: Callable[[float], float],
    interval: tuple[float, float],
    tol: float = 1e-8,
    grid: int = 64,
) -> tuple[float, float]:
    """Global-ish maximum of ``f`` on ``interval``.

    A ``grid``-point scan brackets the best sample, then golden-section
    search refines it to ``tol`` in the argument.
    """
    lo, hi = map(float, interval)
    if not hi > lo:
        raise ValueError("empty interval")
    xs = np.linspace(lo, hi, grid)
    ys = np.array([f(x) for x in xs], dtype=float)
    if not np.all(np.isfinite(ys)):
        raise ValueError("objective is not finite on the interval")
    k = int(np.argmax(ys))
    if k == 0 or k == grid - 1:
        # maximum on the boundary: refine inside the end cell
        a, b = (xs[0], xs[1]) if k == 0 else (xs[-2], xs[-1])
        res = optimize.minimize_scalar(
            lambda x: -f(x), bounds=(a, b), method="bounded", options={"xatol": tol}
        )
        cands = [(ys[k], xs[k]), (-res.fun, res.x)]
        best = max(cands)
        return float(best[1]), float(best[0])
    try:
        res = optimize.minimize_scalar(
            lambda x: -f(x),
            bracket=(xs[k - 1], xs[k], xs[k + 1]),
            method="golden",
            tol=tol / max(abs(xs[k]), 1e-12),
        )
    except ValueError:
        # flat neighbourhood: no strict bracket, refine inside it instead
        res = optimize.minimize_scalar(
            lambda x: -f(x),
            bounds=(xs[k - 1], xs[k + 1]),
            method="bounded",
            options={"xatol": tol},
        )
    if -res.fun < ys[k]:
        return float(xs[k]), float(ys[k])
    if not np.isfinite(res.fun):
        raise ValueError("objective is not finite at the optimum")
    return float(res.x), float(-res.fun)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    stderr: float
    prefactor: float
    residual_rms: float
    excluded_points: int

    def confidence(self, level: float = 0.95) -> tuple[float, float]:
        z = stats.norm.ppf(0.5 + level / 2)
        return self.exponent - z * self.stderr, self.exponent + z * self.stderr


def fit_scaling(x, y=None, min_points: int = 8, min_decades: float = 2.0) -> ScalingFit:
    """Power-law exponent from a least-squares fit in log-log space.

    ``x`` may be a curve object with ``x`` and ``y`` attributes.  When the
    log-log data show significant curvature the lowest decade is dropped, so
    the fit targets the asymptotic regime.
    """
    if y is None:
        x, y = x.x, x.y
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("scaling fits need positive data")
    if x.size < min_points:
        raise ValueError(f"need at least {min_points} points")
    lx, ly = np.log10(x), np.log10(y)
    if lx.max() - lx.min() < min_decades - 1e-12:
        raise ValueError(f"data must span at least {min_decades} decades")
    excluded = 0
    if x.size >= 5:
        coef, cov = np.polyfit(lx, ly, 2, cov=True)
        curved = abs(coef[0]) > 3 * np.sqrt(cov[0, 0]) and abs(coef[0]) > 1e-3
        keep = lx >= lx.min() + 1.0
        if curved and keep.sum() >= 4:
            excluded = int((~keep).sum())
            lx, ly = lx[keep], ly[keep]
    fit = stats.linregress(lx, ly)
    resid = ly - (fit.intercept + fit.slope * lx)
    return ScalingFit(
        exponent=float(fit.slope),
        stderr=float(fit.stderr),
        prefactor=float(10**fit.intercept),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        excluded_points=excluded,
    )


# -- optimal passive probe ----------------------------------------------------


def passive_probe(n_tot: float, beta_tot: float) -> gc.GaussianState:
    """Two identical displaced squeezed states after a balanced beam splitter.

    Each input is ``|alpha, r>`` with real ``alpha`` along the anti-squeezed
    quadrature, ``n_tot = 2 (alpha^2 + sinh^2 r)`` and
    ``beta_tot = 2 sinh^2 r / n_tot``.
    """
    if n_tot <= 0 or not 0 <= beta_tot <= 1:
        raise ValueError("need n_tot > 0 and 0 <= beta_tot <= 1")
    sq = n_tot * beta_tot / 2
    alpha = np.sqrt(n_tot * (1 - beta_tot) / 2)
    r = np.arcsinh(np.sqrt(sq))
    single = gc.squeezed(alpha, r)
    return gc.apply(gc.beam_splitter(np.pi / 4), gc.tensor(single, single))


def qfi_passive(n_tot: float, beta_tot: float) -> float:
    """``4 var[N]`` of one internal arm for the optimal passive probe."""
    return qfi_pure_unitary(passive_probe(n_tot, beta_tot), generator=0)


def qfi_passive_closed_form(n_tot: float, beta_tot: float) -> float:
    """Alternative closed form for the same probe.

    Kept for comparison only; it does not agree with ``qfi_passive``.
    """
    n, b = n_tot, beta_tot
    return 2 * n * (2 * n * b * (2 - b) + 2 * (1 - b) * np.sqrt(n * b * (2 + n * b)))


def optimal_passive_qfi(n_tot: float, qfi=qfi_passive, tol: float = 1e-8) -> tuple[float, float]:
    """``(beta_tot_max, H_max)`` maximising ``qfi(n_tot, beta)`` over beta."""
    return maximize_scalar(lambda b: qfi(n_tot, b), (0.0, 1.0), tol=tol)


def passive_formula_check(n_grid=(10.0, 1e2, 1e3, 1e4, 1e6)) -> dict:
    """Compare the alternative closed-form passive QFI against the ``4 var[G]`` oracle.

    Returns optimal fractions and ``H_max / N^2`` for both, per ``n_tot``.
    """
    rows = []
    for n in n_grid:
        b_o, h_o = optimal_passive_qfi(n)
        b_p, h_p = optimal_passive_qfi(n, qfi=qfi_passive_closed_form)
        rows.append(
            {
                "n_tot": float(n),
                "beta_max_oracle": b_o,
                "h_max_over_n2_oracle": h_o / n**2,
                "beta_max_closed_form": b_p,
                "h_max_over_n2_closed_form": h_p / n**2,
            }
        )
    last = rows[-1]
    agree = (
        abs(last["beta_max_oracle"] - last["beta_max_closed_form"]) < 1e-3
        and abs(last["h_max_over_n2_oracle"] / last["h_max_over_n2_closed_form"] - 1) < 1e-3
    )
    return {"rows": rows, "closed_form_agrees": bool(agree)}
