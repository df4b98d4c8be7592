"""Two coupled interferometers measuring a phase covariance.

Modes are ordered ``[a1, b1, a2, b2]``.  Each interferometer acts as the
effective beam splitter of ``interferometry.mz_effective_bs`` on
``(a_k, b_k)`` and its outputs ``c_k, d_k`` replace ``a_k, b_k``.  Coherent
light of amplitude ``i sqrt(mu) e^{i psi}`` enters both ``b`` ports; the
``a`` ports carry vacuum, independent squeezed vacua or a twin beam.

The correlation observable ``C(phi1, phi2)`` is built with its centering
constants frozen at the central phases, so that ``<C>`` is a smooth
function of the phases whose mixed derivative is the covariance response.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from . import gaussian_core as gc
from .curves import CurveData
from .interferometry import mz_effective_bs
from .moments import GaussianFields, OpPoly, nrf

__all__ = [
    "HolometerConfig",
    "NoiseModel",
    "OBSERVABLES",
    "input_state",
    "output_state",
    "covariance_uncertainty_zero",
    "classical_uncertainty",
    "ratio",
    "sq_ratio_limit",
    "nrf_at",
    "recovered_covariance",
    "ratio_curves",
    "eta_threshold",
    "nrf_regimes",
    "holographic_noise_average",
]

FAMILIES = ("classical", "squeezed", "twb")
OBSERVABLES = ("dminus_product", "nc_product", "diff_squared")
DEFAULT_OBSERVABLE = {"classical": "nc_product", "squeezed": "nc_product", "twb": "diff_squared"}
STEP = 1e-4


@dataclass(frozen=True)
class HolometerConfig:
    """Input light, working point and readout of the double interferometer.

    Attributes
    ----------
    family : {"classical", "squeezed", "twb"}
        What enters the ``a`` ports: vacuum, two squeezed vacua or a twin beam.
    mu : float
        Mean photon number of each coherent beam.
    lam : float
        Mean photon number of each squeezed vacuum or twin-beam arm.
    psi : float
        Phase of the coherent beams.
    eta : float
        Overall transmission-detection efficiency.
    phi10, phi20 : float
        Central phases; ``phi20`` defaults to ``phi10``.
    observable : str
        ``dminus_product`` (product of centred D- fluctuations),
        ``nc_product`` (product of centred ``N_c`` fluctuations) or
        ``diff_squared`` (``(N_c1 - N_c2 - d)^2 / 2``).
    radiation_pressure : None
        Reserved for a future radiation-pressure correction; must be None.
    """

    family: str = "twb"
    mu: float = 1e6
    lam: float = 0.5
    psi: float = np.pi / 2
    eta: float = 1.0
    phi10: float = 0.0
    phi20: float | None = None
    observable: str | None = None
    radiation_pressure: None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.mu < 0 or self.lam < 0:
            raise ValueError("mu and lam must be non-negative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.phi20 is None:
            object.__setattr__(self, "phi20", self.phi10)
        if self.observable is None:
            object.__setattr__(self, "observable", DEFAULT_OBSERVABLE[self.family])
        if self.observable not in OBSERVABLES:
            raise ValueError(f"unknown observable {self.observable!r}")
        if self.radiation_pressure is not None:
            raise NotImplementedError("radiation-pressure correction is not modelled")
        object.__setattr__(self, "psi", float(self.psi) % (2 * np.pi))

    @property
    def central(self) -> tuple[float, float]:
        return (self.phi10, self.phi20)


def input_state(config: HolometerConfig) -> gc.GaussianState:
    beta = 1j * np.sqrt(config.mu) * np.exp(1j * config.psi)
    coh = gc.coherent(beta)
    if config.family == "twb":
        twb = gc.twin_beam(config.lam)
        # reorder (a1, a2, b1, b2) -> (a1, b1, a2, b2)
        joint = gc.tensor(twb, coh, coh)
        perm = [0, 2, 1, 3]
        idx = np.concatenate([[2 * k, 2 * k + 1] for k in perm])
        return gc.GaussianState(joint.mean[idx], joint.cov[np.ix_(idx, idx)])
    if config.family == "squeezed":
        # squeeze the quadrature carrying the coherent amplitude
        r = np.arcsinh(np.sqrt(config.lam))
        sq = gc.squeezed(0.0, -r * np.exp(2j * np.angle(beta)))
    else:
        sq = gc.vacuum()
    return gc.tensor(sq, coh, sq, coh)


def output_state(config: HolometerConfig, phi1: float, phi2: float) -> gc.GaussianState:
    """State at the four detectors for phases ``phi1, phi2``."""
    state = input_state(config)
    state = gc.apply(mz_effective_bs(phi1), state, [0, 1])
    state = gc.apply(mz_effective_bs(phi2), state, [2, 3])
    if config.eta < 1.0:
        state = gc.apply_loss(config.eta, state)
    return state


def _centering(config: HolometerConfig) -> dict:
    fields = GaussianFields(output_state(config, *config.central))
    n = [fields.expect(fields.number(k)).real for k in range(4)]
    return {"n": n}


def _observable(config: HolometerConfig, fields: GaussianFields, consts: dict) -> OpPoly:
    n = consts["n"]
    nc1, nd1, nc2, nd2 = (fields.number(k) for k in range(4))
    if config.observable == "dminus_product":
        return (nc1 - nd1 - (n[0] - n[1])) * (nc2 - nd2 - (n[2] - n[3]))
    if config.observable == "nc_product":
        return (nc1 - n[0]) * (nc2 - n[2])
    diff = nc1 - nc2 - (n[0] - n[2])
    return 0.5 * (diff * diff)


def mean_c(config: HolometerConfig, phi1: float, phi2: float, consts=None) -> float:
    consts = _centering(config) if consts is None else consts
    fields = GaussianFields(output_state(config, phi1, phi2))
    return fields.expect(_observable(config, fields, consts)).real


def var_c(config: HolometerConfig) -> float:
    """``var[C]`` at the central phases."""
    consts = _centering(config)
    fields = GaussianFields(output_state(config, *config.central))
    return max(fields.variance(_observable(config, fields, consts)), 0.0)


def mixed_derivative(config: HolometerConfig, h: float = STEP) -> float:
    """``d^2 <C> / dphi1 dphi2`` at the central phases.

    Centered 3x3 stencil with one Richardson refinement.
    """
    consts = _centering(config)
    p1, p2 = config.central

    def stencil(step):
        f = lambda s1, s2: mean_c(config, p1 + s1 * step, p2 + s2 * step, consts)  # noqa: E731
        return (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * step**2)

    return (4 * stencil(h / 2) - stencil(h)) / 3


def covariance_uncertainty_zero(config: HolometerConfig) -> float:
    """Zero-order uncertainty ``sqrt(2 var[C]) / |<d^2 C / dphi1 dphi2>|``."""
    den = abs(mixed_derivative(config))
    if den == 0.0:
        return np.inf
    return float(np.sqrt(2 * var_c(config)) / den)


def classical_uncertainty(config: HolometerConfig) -> float:
    """Best classical reference at the same central phases and efficiency.

    Coherent light alone, read out either through ``dminus_product``
    (``sqrt2 / (eta mu |sin phi1 sin phi2|)``) or ``nc_product``
    (``sqrt2 / (eta mu |cos(phi1/2) cos(phi2/2)|)``); the smaller is kept.
    Both closed forms agree with the moments engine.
    """
    p1, p2 = config.central
    scale = config.eta * config.mu
    if scale == 0:
        return np.inf
    gain = max(abs(np.sin(p1) * np.sin(p2)), abs(np.cos(p1 / 2) * np.cos(p2 / 2)))
    return float(np.sqrt(2) / (scale * gain)) if gain > 0 else np.inf


def ratio(config: HolometerConfig) -> float:
    """``R = U / U_CL``."""
    return covariance_uncertainty_zero(config) / classical_uncertainty(config)


def sq_ratio_limit(eta: float, lam: float, phi0: float) -> float:
    """Large-``mu`` limit of ``R`` for squeezed vacua read out by ``nc_product``."""
    return 1.0 - eta * (1 + np.cos(phi0)) * np.sqrt(lam) * (np.sqrt(lam + 1) - np.sqrt(lam))


_VARY = {"eta": "eta", "lambda": "lam", "phi0": "phi10"}


def _with(config: HolometerConfig, vary: str, value: float) -> HolometerConfig:
    if vary not in _VARY:
        raise ValueError(f"vary must be one of {sorted(_VARY)}")
    if vary == "phi0":
        return replace(config, phi10=float(value), phi20=float(value))
    return replace(config, **{_VARY[vary]: float(value)})


def ratio_curves(config: HolometerConfig, vary: str, grid) -> CurveData:
    """``R(x)`` with ``x`` one of ``eta``, ``lambda`` or ``phi0``."""
    grid = np.asarray(grid, dtype=float)
    u, ucl = [], []
    for x in grid:
        cfg = _with(config, vary, x)
        u.append(covariance_uncertainty_zero(cfg))
        ucl.append(classical_uncertainty(cfg))
    u, ucl = np.array(u), np.array(ucl)
    return CurveData(
        x_label=vary,
        y_label="R",
        x=grid,
        y=u / ucl,
        columns={"U": u, "U_CL": ucl},
        provenance={
            "family": config.family,
            "observable": config.observable,
            "mu": config.mu,
            "lam": config.lam,
            "psi": config.psi,
            "eta": config.eta,
            "phi10": config.phi10,
            "phi20": config.phi20,
        },
    )


def eta_threshold(config: HolometerConfig, against: HolometerConfig | None = None,
                  bracket=(0.05, 1.0)) -> float:
    """Efficiency at which ``R`` crosses 1, or crosses ``R`` of ``against``.

    Root of ``R(eta) - 1`` (or ``R(eta) - R_against(eta)``) by Brent's method
    on ``bracket``.
    """
    def gap(eta):
        r = ratio(replace(config, eta=eta))
        ref = 1.0 if against is None else ratio(replace(against, eta=eta))
        return r - ref

    lo, hi = bracket
    g_lo, g_hi = gap(lo), gap(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise RuntimeError(f"no efficiency crossing in [{lo}, {hi}]")
    return float(optimize.brentq(gap, lo, hi, xtol=1e-10))


def tau_to_phase(tau: float) -> float:
    """Central phase giving interferometer transmission ``tau = cos^2(phi/2)``."""
    return float(2 * np.arccos(np.sqrt(np.clip(tau, 0.0, 1.0))))


def nrf_at(config: HolometerConfig, tau: float, sign: int) -> float:
    """NRF of ``(N_c1, N_c2)`` with both interferometers at transmission ``tau``."""
    phi = tau_to_phase(tau)
    return nrf(output_state(config, phi, phi), sign, modes=(0, 2))


def nrf_regimes(config: HolometerConfig, tau_grid) -> CurveData:
    """NRF- (at ``psi = pi/2``) and NRF+ (at ``psi = 0``) versus transmission.

    Column ``kappa`` is ``mu (1 - tau) / (tau lam)``; ``kappa < 1`` marks the
    twin-beam dominated regime, ``kappa > 1`` the bright regime.
    """
    if config.family != "twb":
        raise ValueError("NRF regimes are defined for the twin-beam family")
    tau = np.asarray(tau_grid, dtype=float)
    minus_cfg = replace(config, psi=np.pi / 2)
    plus_cfg = replace(config, psi=0.0)
    minus = np.array([nrf_at(minus_cfg, t, -1) for t in tau])
    plus = np.array([nrf_at(plus_cfg, t, +1) for t in tau])
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(tau * config.lam > 0, config.mu * (1 - tau) / (tau * config.lam), np.inf)
    kappa = np.minimum(kappa, np.finfo(float).max)
    return CurveData(
        x_label="tau",
        y_label="nrf_minus",
        x=tau,
        y=minus,
        columns={"nrf_plus": plus, "kappa": kappa, "bright": (kappa > 1).astype(float)},
        provenance={"mu": config.mu, "lam": config.lam, "eta": config.eta},
    )


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian phase noise shared by the two interferometers.

    ``parallel`` gives fully correlated fluctuations, ``orthogonal``
    independent ones; the marginals are identical.
    """

    configuration: str = "parallel"
    sigma: float = 1e-3

    def __post_init__(self):
        if self.configuration not in ("parallel", "orthogonal"):
            raise ValueError("configuration must be 'parallel' or 'orthogonal'")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @property
    def correlation(self) -> float:
        return 1.0 if self.configuration == "parallel" else 0.0

    def nodes(self, order: int = 8):
        """Gauss-Hermite nodes ``(dphi1, dphi2)`` and weights summing to 1."""
        z, w = np.polynomial.hermite_e.hermegauss(order)
        w = w / w.sum()
        z1, z2 = np.meshgrid(z, z, indexing="ij")
        ww = np.outer(w, w).ravel()
        rho = self.correlation
        d1 = self.sigma * z1.ravel()
        d2 = self.sigma * (rho * z1.ravel() + np.sqrt(1 - rho**2) * z2.ravel())
        return d1, d2, ww


MAX_NOISE_SIGMA = 0.1


def holographic_noise_average(config: HolometerConfig, noise: NoiseModel, statistic=None,
                              order: int = 8) -> float:
    """Average of a statistic over the phase noise ``f_x(phi1, phi2)``.

    Parameters
    ----------
    statistic : callable ``(phi1, phi2) -> float``, optional
        Defaults to ``<C(phi1, phi2)>`` with centering frozen at the central
        phases.
    """
    if noise.sigma > MAX_NOISE_SIGMA:
        raise ValueError(f"sigma {noise.sigma} too large for the small-noise quadrature")
    if statistic is None:
        consts = _centering(config)
        statistic = lambda a, b: mean_c(config, a, b, consts)  # noqa: E731
    p1, p2 = config.central
    if noise.sigma == 0:
        return float(statistic(p1, p2))
    d1, d2, w = noise.nodes(order)
    vals = np.array([statistic(p1 + x, p2 + y) for x, y in zip(d1, d2)])
    return float(w @ vals)


def recovered_covariance(config: HolometerConfig, noise: NoiseModel, order: int = 8) -> float:
    """Estimate of ``E[dphi1 dphi2]`` from the noise-averaged ``<C>``.

    To second order ``E[C] = C0 + (C11 + C22) sigma^2 / 2 + C12 E[dphi1 dphi2]``;
    the marginal terms are removed with finite-difference curvatures and the
    remainder is divided by the mixed derivative.
    """
    consts = _centering(config)
    stat = lambda a, b: mean_c(config, a, b, consts)  # noqa: E731
    p1, p2 = config.central
    c0 = stat(p1, p2)

    def curvature(axis, step):
        e = np.array([step, 0.0]) if axis == 0 else np.array([0.0, step])
        return (stat(p1 + e[0], p2 + e[1]) - 2 * c0 + stat(p1 - e[0], p2 - e[1])) / step**2

    diag = [(4 * curvature(k, STEP / 2) - curvature(k, STEP)) / 3 for k in (0, 1)]
    avg = holographic_noise_average(config, noise, stat, order)
    marginal = c0 + 0.5 * noise.sigma**2 * sum(diag)
    return float((avg - marginal) / mixed_derivative(config))
