"""Single two-mode interferometers with passive or active stages.

A configuration is an input pair, a first stage (balanced beam splitter or
OPA), a phase ``phi`` on the upper arm, a detection stage (beam splitter or
OPA) and detectors of efficiency ``eta``.  When both stages are beam
splitters the whole device reduces to the effective beam splitter
``c = cos(phi/2) a + sin(phi/2) b``, ``d = cos(phi/2) b - sin(phi/2) a``.
All observables are weighted sums of the two detected photon numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from . import gaussian_core as gc
from .curves import CurveData
from .estimation import (
    BoundReport,
    OutcomeModel,
    StationaryPointError,
    derivative,
    maximize_scalar,
    sensitivity,
)
from .moments import weighted_number_moments

__all__ = [
    "OBSERVABLES",
    "FAMILIES",
    "InterferometerConfig",
    "EnergyBudget",
    "ConfigOptimum",
    "mz_effective_bs",
    "transmissivity",
    "state_at_detectors",
    "fringe_observable",
    "outcome_model",
    "config_sensitivity",
    "simulate_fringes",
    "sensitivity_ratio",
    "squeezing_threshold",
    "optimize_configuration",
]

OBSERVABLES = {"D-": (1.0, -1.0), "D+": (1.0, 1.0), "Nc": (1.0, 0.0), "Nd": (0.0, 1.0)}
FAMILIES = ("passive-passive", "passive-active", "active-passive", "active-active")


def _as_state(spec) -> gc.GaussianState:
    if isinstance(spec, gc.GaussianState):
        return spec
    kind, params = spec
    return gc.make_state(kind, **dict(params))


@dataclass(frozen=True)
class InterferometerConfig:
    """Two-mode interferometer.

    Attributes
    ----------
    inputs : pair of GaussianState or ``(kind, params)`` specs
        Single-mode states entering ports ``a`` and ``b``.
    first_stage, detection : {"bs", "opa"}
        Passive (balanced beam splitter) or active (two-mode squeezer).
    r_int, r_det : float
        OPA gains of the first and detection stages.
    det_phase : float
        Pump phase of the detection OPA.
    observable : {"D-", "D+", "Nc", "Nd"}
        Photon-number difference, sum or a single output port.
    eta : float
        Detection efficiency applied after the last optical element.
    working_point : float
        Phase at which the sensitivity is quoted.
    """

    inputs: tuple = (("coherent", {"alpha": 1.0}), ("vacuum", {}))
    first_stage: str = "bs"
    detection: str = "bs"
    observable: str = "D-"
    r_int: float = 0.0
    r_det: float = 0.0
    det_phase: float = 0.0
    eta: float = 1.0
    working_point: float = np.pi / 2
    _states: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.inputs) != 2:
            raise ValueError("two input states are required")
        states = tuple(_as_state(s) for s in self.inputs)
        if any(s.n_modes != 1 for s in states):
            raise ValueError("inputs must be single-mode states")
        object.__setattr__(self, "_states", states)
        if self.first_stage not in ("bs", "opa") or self.detection not in ("bs", "opa"):
            raise ValueError("stages must be 'bs' or 'opa'")
        if self.observable not in OBSERVABLES:
            raise ValueError(f"unknown observable {self.observable!r}")
        if self.r_int < 0 or self.r_det < 0:
            raise ValueError("OPA gains must be non-negative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    @property
    def input_state(self) -> gc.GaussianState:
        return gc.tensor(*self._states)


@dataclass(frozen=True)
class EnergyBudget:
    """Energy bookkeeping for ``|alpha, r> |gamma, xi>`` passive probes."""

    n_tot: float
    delta: float
    beta_tot: float
    beta: float

    def __post_init__(self):
        if self.n_tot < 0:
            raise ValueError("n_tot must be non-negative")
        for name in ("delta", "beta_tot", "beta"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.beta > self.beta_tot + 1e-12:
            raise ValueError("beta cannot exceed beta_tot")

    @classmethod
    def from_amplitudes(cls, alpha, gamma, r, xi) -> "EnergyBudget":
        coh = abs(alpha) ** 2 + abs(gamma) ** 2
        sq_r, sq_xi = np.sinh(abs(r)) ** 2, np.sinh(abs(xi)) ** 2
        n = coh + sq_r + sq_xi
        return cls(
            n_tot=n,
            delta=abs(alpha) ** 2 / coh if coh > 0 else 0.0,
            beta_tot=(sq_r + sq_xi) / n if n > 0 else 0.0,
            beta=sq_xi / n if n > 0 else 0.0,
        )


def transmissivity(phi: float) -> float:
    return float(np.cos(phi / 2) ** 2)


def mz_effective_bs(phi: float) -> gc.SymplecticOp:
    """Balanced Mach-Zehnder as one beam splitter of transmissivity ``cos^2(phi/2)``."""
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return gc.op_from_bogoliubov([[c, s], [-s, c]])


def _stage(kind: str, gain: float, phase: float = 0.0) -> gc.SymplecticOp:
    if kind == "bs":
        return gc.beam_splitter(np.pi / 4)
    return gc.two_mode_squeezer(gain * np.exp(1j * phase))


def state_at_detectors(config: InterferometerConfig, phi: float) -> gc.GaussianState:
    """Gaussian state reaching the two detectors."""
    state = config.input_state
    if config.first_stage == "bs" and config.detection == "bs":
        state = gc.apply(mz_effective_bs(phi), state)
    else:
        op = (
            _stage(config.first_stage, config.r_int)
            .then(gc.op_from_bogoliubov(np.diag([np.exp(-1j * phi), 1.0])))
            .then(_stage(config.detection, config.r_det, config.det_phase))
        )
        state = gc.apply(op, state)
    if config.eta < 1.0:
        state = gc.apply_loss(config.eta, state)
    return state


def fringe_observable(config: InterferometerConfig, phi: float) -> tuple[float, float]:
    """Mean and variance of the configured observable at ``phi``."""
    weights = OBSERVABLES[config.observable]
    return weighted_number_moments(state_at_detectors(config, phi), weights)


def outcome_model(config: InterferometerConfig) -> OutcomeModel:
    """Gaussian outcome model with the exact first two moments."""
    return OutcomeModel(
        mean=lambda p: fringe_observable(config, p)[0],
        std=lambda p: np.sqrt(max(fringe_observable(config, p)[1], 0.0)),
    )


def config_sensitivity(config: InterferometerConfig, phi: float | None = None) -> float:
    """``sqrt(var O) / |d<O>/dphi|`` at ``phi`` (default: the working point)."""
    phi = config.working_point if phi is None else phi
    return sensitivity(outcome_model(config), phi)


def simulate_fringes(
    config: InterferometerConfig, phi_grid, shots: int, seed: int
) -> CurveData:
    """Monte Carlo fringe: sample mean and spread of ``shots`` draws per phase.

    Each draw comes from a Gaussian with the exact mean and variance of the
    observable.  Every grid point gets its own child stream of ``seed``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    phi_grid = np.asarray(phi_grid, dtype=float)
    streams = np.random.SeedSequence(seed).spawn(phi_grid.size)
    means, spreads, exact = [], [], []
    for phi, ss in zip(phi_grid, streams):
        m, v = fringe_observable(config, phi)
        draws = np.random.default_rng(ss).normal(m, np.sqrt(max(v, 0.0)), size=shots)
        means.append(draws.mean())
        spreads.append(draws.std(ddof=1) if shots > 1 else 0.0)
        exact.append(m)
    return CurveData(
        x_label="phi",
        y_label=config.observable,
        x=phi_grid,
        y=means,
        y_err=spreads,
        x_units="rad",
        y_units="photons",
        columns={"exact_mean": exact},
        provenance={"seed": seed, "shots": shots},
    )


def sensitivity_ratio(config_sq, config_cl, phi_grid) -> CurveData:
    """``R(phi) = S_sq / S_cl``; points where either fringe is flat are skipped.

    ``provenance["windows"]`` lists the phase intervals where ``R < 1``.
    """
    xs, rs = [], []
    for phi in np.asarray(phi_grid, dtype=float):
        try:
            r = config_sensitivity(config_sq, phi) / config_sensitivity(config_cl, phi)
        except StationaryPointError:
            continue
        if np.isfinite(r):
            xs.append(phi)
            rs.append(r)
    xs, rs = np.array(xs), np.array(rs)
    below = rs < 1
    windows, start = [], None
    for x, b in zip(xs, below):
        if b and start is None:
            start = x
        if not b and start is not None:
            windows.append([float(start), float(prev)])
            start = None
        prev = x
    if start is not None:
        windows.append([float(start), float(xs[-1])])
    return CurveData(
        x_label="phi",
        y_label="R_sq_cl",
        x=xs,
        y=rs,
        x_units="rad",
        provenance={"windows": windows},
    )


def squeezed_mz(alpha2: float, lam: float, eta: float = 1.0, observable="D-") -> InterferometerConfig:
    """Coherent state in ``a`` and amplitude-squeezed vacuum in ``b``."""
    r = np.arcsinh(np.sqrt(lam))
    return InterferometerConfig(
        inputs=(("coherent", {"alpha": np.sqrt(alpha2)}), ("squeezed", {"xi": -r})),
        observable=observable,
        eta=eta,
    )


def squeezing_threshold(alpha2: float, phi: float = np.pi / 2) -> float:
    """Smallest squeezing ``lam`` at which ``R_sq/cl(phi)`` returns to 1 (D- readout).

    The search is restricted to ``lam < alpha2``; at ``lam = alpha2`` the
    fringe contrast vanishes and beyond it the squeezed beam dominates.
    """
    classical = config_sensitivity(squeezed_mz(alpha2, 0.0), phi)

    def excess(log_lam):
        return config_sensitivity(squeezed_mz(alpha2, np.exp(log_lam)), phi) / classical - 1

    lo, hi = np.log(1e-8 * alpha2), np.log(0.99 * alpha2)
    return float(np.exp(optimize.brentq(excess, lo, hi, xtol=1e-12)))


# -- configuration optimisation -------------------------------------------------


class _PhaseScan:
    """Fast ``(mean, var, d mean/d phi)`` for one input state and fixed stages.

    Works directly on the moments after the first stage, so each phase
    costs a handful of 4x4 products; the phase derivative is exact.
    """

    def __init__(self, config: InterferometerConfig):
        self.weights = np.repeat(np.asarray(OBSERVABLES[config.observable]), 2)
        if config.first_stage == "bs" and config.detection == "bs":
            # the phase enters through mz_effective_bs
            first = last = np.eye(4)
            self.effective = True
        else:
            first = _stage(config.first_stage, config.r_int).matrix
            last = _stage(config.detection, config.r_det, config.det_phase).matrix
            self.effective = False
        inp = config.input_state
        self.m1 = first @ inp.mean
        self.v1 = first @ inp.cov @ first.T
        eta = config.eta
        self.last = np.sqrt(eta) * last
        self.noise = (1.0 - eta) * np.eye(4)
        self.omega = gc.omega(2)

    def _rotation(self, phi):
        """Phase-dependent block and its derivative."""
        if self.effective:
            c, sn = np.cos(phi / 2), np.sin(phi / 2)
            rot = np.kron([[c, sn], [-sn, c]], np.eye(2))
            drot = 0.5 * np.kron([[-sn, c], [-c, -sn]], np.eye(2))
            return rot, drot
        c, sn = np.cos(phi), np.sin(phi)
        rot, drot = np.eye(4), np.zeros((4, 4))
        # a -> a e^{-i phi}: x -> c x + s p, p -> -s x + c p
        rot[:2, :2] = [[c, sn], [-sn, c]]
        drot[:2, :2] = [[-sn, c], [-c, -sn]]
        return rot, drot

    def __call__(self, phi: float):
        rot, drot = self._rotation(phi)
        t, dt = self.last @ rot, self.last @ drot
        m, dm = t @ self.m1, dt @ self.m1
        v = t @ self.v1 @ t.T + self.noise
        w = self.weights
        mean = 0.25 * (np.sum(w * np.diag(v)) + m @ (w * m)) - 0.25 * w.sum()
        dv_diag = 2.0 * np.einsum("ij,jk,ik->i", dt, self.v1, t)
        dmean = 0.25 * (np.sum(w * dv_diag) + 2.0 * dm @ (w * m))
        mv = w[:, None] * v
        om = w[:, None] * self.omega
        var = (2 * np.sum(mv * mv.T) + 2 * np.sum(om * om.T) + 4 * (w * m) @ v @ (w * m)) / 16
        return mean, var, dmean

    def sensitivity(self, phi: float) -> float:
        _, var, dmean = self(phi)
        if abs(dmean) < 1e-14:
            return np.inf
        return float(np.sqrt(max(var, 0.0)) / abs(dmean))


@dataclass(frozen=True)
class ConfigOptimum:
    """Best configuration found for one family and energy."""

    family: str
    n_tot: float
    eta: float
    report: BoundReport
    phi: float
    config: InterferometerConfig
    params: dict
    converged: bool
    message: str = ""
    x: tuple = ()

    @property
    def sensitivity(self) -> float:
        return self.report.sensitivity


def _softmax(z):
    z = np.concatenate([[0.0], np.asarray(z, dtype=float)])
    e = np.exp(z - z.max())
    return e / e.sum()


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _passive_inputs(x, n_tot):
    """``|alpha, r e^{i psi_a}> |gamma e^{i theta}, xi e^{i psi_b}>`` at fixed energy."""
    f_a, f_g, f_r, f_x = _softmax(x[:3]) * n_tot
    psi_a, psi_b, theta = x[3], x[4], x[5]
    r = np.arcsinh(np.sqrt(f_r)) * np.exp(1j * psi_a)
    xi = np.arcsinh(np.sqrt(f_x)) * np.exp(1j * psi_b)
    inputs = (
        ("squeezed", {"alpha": np.sqrt(f_a), "xi": r}),
        ("squeezed", {"alpha": np.sqrt(f_g) * np.exp(1j * theta), "xi": xi}),
    )
    params = {
        "alpha": float(np.sqrt(f_a)),
        "gamma": float(np.sqrt(f_g)),
        "theta": float(theta),
        "sinh2_r": float(f_r),
        "sinh2_xi": float(f_x),
        "psi_a": float(psi_a),
        "psi_b": float(psi_b),
        "budget": EnergyBudget.from_amplitudes(np.sqrt(f_a), np.sqrt(f_g), abs(r), abs(xi)),
    }
    return inputs, 0.0, params


def _sc_vacuum_inputs(x, n_tot):
    """``|alpha, r e^{i psi}> |0>`` at fixed energy."""
    beta, psi = _sigmoid(x[0]), x[1]
    r = np.arcsinh(np.sqrt(beta * n_tot)) * np.exp(1j * psi)
    alpha = np.sqrt((1 - beta) * n_tot)
    inputs = (("squeezed", {"alpha": alpha, "xi": r}), ("vacuum", {}))
    params = {
        "alpha": float(alpha),
        "sinh2_r": float(beta * n_tot),
        "psi_a": float(psi),
        "budget": EnergyBudget.from_amplitudes(alpha, 0.0, abs(r), 0.0),
    }
    return inputs, 0.0, params


def _active_inputs(x, n_tot):
    """Coherent inputs and an OPA sharing ``n_tot`` photons after the OPA."""
    u = 1.0 if x[0] is None else _sigmoid(x[0])
    r_int = np.arcsinh(np.sqrt(u * n_tot / 2))
    delta, theta = _sigmoid(x[1]), x[2]
    mu, nu = np.cosh(r_int), np.sinh(r_int)
    a0, g0 = np.sqrt(delta), np.sqrt(1 - delta) * np.exp(1j * theta)
    amplified = abs(mu * a0 + nu * np.conj(g0)) ** 2 + abs(mu * g0 + nu * np.conj(a0)) ** 2
    scale = np.sqrt(max(1.0 - u, 0.0) * n_tot / amplified) if amplified > 0 else 0.0
    inputs = (("coherent", {"alpha": scale * a0}), ("coherent", {"alpha": scale * g0}))
    params = {
        "r_int": float(r_int),
        "alpha": float(abs(scale * a0)),
        "gamma": float(abs(scale * g0)),
        "theta": float(theta),
        "opa_fraction": float(u),
    }
    return inputs, r_int, params


def optimize_configuration(
    family: str,
    n_tot: float,
    eta: float = 1.0,
    r: float = 6.0,
    starts: int = 6,
    seed: int = 0,
    maxiter: int = 4000,
    ansatz: str = "general",
    warm_start=None,
) -> ConfigOptimum:
    """Minimise the sensitivity of one interferometer family at fixed energy.

    Parameters
    ----------
    family : {"passive-passive", "passive-active", "active-passive", "active-active"}
        First stage and detection stage.  Passive detection reads ``D-``,
        active detection reads ``D+``.
    n_tot : float
        Mean photon number inside the interferometer (after the first stage).
    eta : float
        Detection efficiency.
    r : float
        Gain of the detection OPA (ignored for passive detection).
    starts : int
        Random multistarts (seeded) of the Nelder-Mead polish, on top of a
        fixed set of structured starts.
    ansatz : {"general", "sc-vacuum"}
        For passive first stages, ``"sc-vacuum"`` restricts the inputs to a
        squeezed coherent state and the vacuum.
    warm_start : ConfigOptimum, optional
        Earlier optimum of the same family and ansatz used as an extra start.

    Notes
    -----
    Passive first stages optimise over two displaced squeezed inputs with
    free squeezing and coherent phases.  Active first stages use coherent
    inputs (the OPA supplies the squeezing) and also try vacuum inputs.
    The phase ``phi`` is optimised jointly with the inputs.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if not n_tot > 0:
        raise ValueError("n_tot must be positive")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    first, det = ("bs" if s == "passive" else "opa" for s in family.split("-"))
    observable = "D-" if det == "bs" else "D+"
    r_det = float(r) if det == "opa" else 0.0
    if ansatz not in ("general", "sc-vacuum"):
        raise ValueError(f"unknown ansatz {ansatz!r}")
    if first == "opa":
        build, dim = _active_inputs, 4
    elif ansatz == "sc-vacuum":
        build, dim = _sc_vacuum_inputs, 3
    else:
        build, dim = _passive_inputs, 7

    def make(x):
        inputs, r_int, params = build(x[:-1], n_tot)
        cfg = InterferometerConfig(
            inputs=inputs,
            first_stage=first,
            detection=det,
            observable=observable,
            r_int=r_int,
            r_det=r_det,
            eta=eta,
            working_point=float(x[-1]),
        )
        return cfg, params

    def objective(x):
        try:
            cfg, _ = make(x)
            s = _PhaseScan(cfg).sensitivity(x[-1])
        except (ValueError, FloatingPointError):
            return 1e300
        return float(np.log(s)) if np.isfinite(s) and s > 0 else 1e300

    rng = np.random.default_rng(seed)
    inits = []
    # structured starts: balanced energy split, squeezing phases 0 or pi
    for phases in ((0.0, 0.0), (0.0, np.pi)):
        for phi in (np.pi / 4, np.pi / 2):
            x0 = np.zeros(dim)
            if dim == 7:
                x0[3:5] = phases
            x0[-1] = phi
            inits.append(x0)
    for _ in range(starts):
        x0 = rng.uniform(-np.pi, np.pi, size=dim)
        x0[-1] = rng.uniform(0.05, np.pi - 0.05)
        inits.append(x0)
    if warm_start is not None and len(warm_start.x) == dim and None not in warm_start.x:
        inits.append(np.asarray(warm_start.x, dtype=float))
    candidates = []
    for x0 in inits:
        res = optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": maxiter, "maxfev": 2 * maxiter},
        )
        candidates.append((res.fun, list(res.x), bool(res.success), res.message))
    if first == "opa":
        # vacuum inputs: only the phase is free
        def phase_only(p):
            return objective([None, 0.0, 0.0, p])

        p_best, neg = maximize_scalar(lambda p: -phase_only(p), (1e-4, np.pi - 1e-4), tol=1e-10)
        candidates.append((-neg, [None, 0.0, 0.0, p_best], True, "vacuum inputs"))
    best = min(candidates, key=lambda c: c[0])
    if not np.isfinite(best[0]) or best[0] >= 1e299:
        raise RuntimeError(f"no finite sensitivity found for {family} at n_tot={n_tot}")
    cfg, params = make(best[1])
    s_min = float(np.exp(best[0]))
    return ConfigOptimum(
        family=family,
        n_tot=float(n_tot),
        eta=float(eta),
        report=BoundReport(sensitivity=s_min),
        phi=float(best[1][-1]),
        config=cfg,
        params=params,
        converged=best[2],
        message=str(best[3]),
        x=tuple(best[1]),
    )
