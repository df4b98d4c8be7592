"""Random small Gaussian circuits run through both engines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cvmetro import fock_oracle as fo
from cvmetro import gaussian_core as gc
from cvmetro.moments import GaussianFields, OpPoly, all_number_moments

CUTOFF = 100
MAX_MEAN_PHOTONS = 1.0


@dataclass
class Circuit:
    inputs: list  # per-mode (kind, params) or [("twb", params)]
    ops: list  # (kind, params, modes)
    eta: float


def _random_single(rng):
    kind = rng.choice(["vacuum", "coherent", "squeezed", "displaced_squeezed"])
    alpha = rng.uniform(0, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    r = np.arcsinh(np.sqrt(rng.uniform(0, 1.0)))
    xi = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
    if kind == "vacuum":
        return ("vacuum", {})
    if kind == "coherent":
        return ("coherent", {"alpha": alpha})
    if kind == "squeezed":
        return ("squeezed", {"xi": xi})
    return ("displaced_squeezed", {"alpha": alpha * 0.7, "xi": xi * 0.7})


def _random_op(rng, n_modes):
    kinds = ["bs", "phase", "sq1"] + (["bs", "sq2"] if n_modes == 2 else [])
    kinds = [k for k in kinds if n_modes == 2 or k != "bs"]
    kind = rng.choice(kinds)
    r = np.arcsinh(np.sqrt(rng.uniform(0, 1.0)))
    if kind == "bs":
        return ("bs", {"theta_bs": rng.uniform(0, np.pi / 2.5), "phase": rng.uniform(0, 2 * np.pi)}, (0, 1))
    if kind == "sq2":
        return ("sq2", {"xi": 0.6 * r * np.exp(1j * rng.uniform(0, 2 * np.pi))}, (0, 1))
    mode = int(rng.integers(n_modes))
    if kind == "phase":
        return ("phase", {"varphi": rng.uniform(0, 2 * np.pi)}, (mode,))
    return ("sq1", {"xi": 0.6 * r * np.exp(1j * rng.uniform(0, 2 * np.pi))}, (mode,))


def gaussian_input(spec) -> gc.GaussianState:
    kind, params = spec
    if kind == "twb":
        return gc.twin_beam(params["lam"], params.get("phase", 0.0))
    if kind == "vacuum":
        return gc.vacuum()
    if kind == "coherent":
        return gc.coherent(params["alpha"])
    if kind == "squeezed":
        return gc.squeezed(0.0, params["xi"])
    return gc.squeezed(params["alpha"], params["xi"])


GAUSSIAN_OPS = {
    "bs": lambda p: gc.beam_splitter(p["theta_bs"], p["phase"]),
    "phase": lambda p: gc.phase_shift(p["varphi"]),
    "sq1": lambda p: gc.single_mode_squeezer(p["xi"]),
    "sq2": lambda p: gc.two_mode_squeezer(p["xi"]),
}


def run_gaussian(c: Circuit) -> gc.GaussianState:
    state = gc.tensor(*[gaussian_input(s) for s in c.inputs])
    for kind, params, modes in c.ops:
        state = gc.apply(GAUSSIAN_OPS[kind](params), state, list(modes))
    return state


def peak_photons(c: Circuit) -> float:
    """Largest single-mode mean photon number over every circuit stage."""
    state = gc.tensor(*[gaussian_input(s) for s in c.inputs])
    peak = state.mean_photons().max()
    for kind, params, modes in c.ops:
        state = gc.apply(GAUSSIAN_OPS[kind](params), state, list(modes))
        peak = max(peak, state.mean_photons().max())
    return float(peak)


def run_fock(c: Circuit, cutoff: int | None = None) -> fo.FockVector:
    cutoff = cutoff or CUTOFF
    if len(c.inputs) == 1 and c.inputs[0][0] == "twb":
        state = fo.build_fock("twb", c.inputs[0][1], cutoff)
    elif len(c.inputs) == 1:
        state = fo.build_fock(*c.inputs[0], cutoff)
    else:
        state = fo.build_fock("product", {"factors": c.inputs}, cutoff)
    for kind, params, modes in c.ops:
        state = fo.evolve(kind, params, state, modes)
    return state


def random_circuit(rng) -> Circuit:
    """Draw until the output is comfortably inside the Fock cutoff."""
    while True:
        n_modes = int(rng.integers(1, 3))
        if n_modes == 2 and rng.uniform() < 0.3:
            inputs = [("twb", {"lam": rng.uniform(0, 0.5), "phase": rng.uniform(0, 2 * np.pi)})]
        else:
            inputs = [_random_single(rng) for _ in range(n_modes)]
        ops = [_random_op(rng, n_modes) for _ in range(int(rng.integers(0, 5)))]
        c = Circuit(inputs, ops, float(rng.choice([0.6, 1.0])))
        if peak_photons(c) <= MAX_MEAN_PHOTONS:
            return c


def compare(c: Circuit) -> float:
    """Largest absolute discrepancy over means, variances and number moments."""
    g = run_gaussian(c)
    f = run_fock(c)
    n = g.n_modes
    fields = GaussianFields(g)
    errs = []
    for k in range(n):
        for mono in ([(k, False)], [(k, False), (k, False)], [(k, True), (k, False)]):
            poly = OpPoly.scalar(1.0)
            for m, d in mono:
                poly = poly * fields.op(m, d)
            errs.append(abs(fields.expect(poly) - fo.moment(f, mono)))
    lossy = gc.apply_loss(c.eta, g)
    moments = all_number_moments(lossy, 4)
    dist = fo.detect(f, c.eta)
    for powers, value in moments.items():
        errs.append(abs(value - fo.number_moment(dist, powers)))
    return max(errs)
