import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvmetro import fock_oracle as fo
from cvmetro import gaussian_core as gc
from cvmetro import interferometry as itf

finite = dict(allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(phi=st.floats(0.0, 2 * np.pi, **finite))
def test_effective_beam_splitter(phi):
    op = itf.mz_effective_bs(phi)
    assert op.symplectic_error() < 1e-12
    out = gc.apply(op, gc.tensor(gc.coherent(1.0), gc.vacuum()))
    assert out.mean_photons()[0] == pytest.approx(itf.transmissivity(phi), abs=1e-12)


@pytest.mark.parametrize("alpha2", [1e2, 1e4, 1e6])
def test_classical_sensitivity_at_half_fringe(alpha2):
    s = itf.config_sensitivity(itf.squeezed_mz(alpha2, 0.0))
    assert s == pytest.approx(1 / np.sqrt(alpha2), rel=1e-9)


@pytest.mark.parametrize("alpha2, lam", [(100.0, 2.0), (1e4, 0.5), (1e4, 30.0)])
def test_squeezed_sensitivity_closed_form(alpha2, lam):
    # D- at pi/2: sqrt(alpha^2 e^{-2r} + lam) / (alpha^2 - lam)
    r = np.arcsinh(np.sqrt(lam))
    expected = np.sqrt(alpha2 * np.exp(-2 * r) + lam) / (alpha2 - lam)
    assert itf.config_sensitivity(itf.squeezed_mz(alpha2, lam)) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("phi", [0.4, np.pi / 2, 2.2])
@pytest.mark.parametrize("observable", ["D-", "D+", "Nc"])
def test_fringe_moments_match_fock_oracle(phi, observable):
    alpha, lam, eta = 1.2, 0.3, 0.8
    r = np.arcsinh(np.sqrt(lam))
    cfg = itf.InterferometerConfig(
        inputs=(("coherent", {"alpha": alpha}), ("squeezed", {"xi": -r})), observable=observable, eta=eta
    )
    mean, var = itf.fringe_observable(cfg, phi)
    state = fo.build_fock("product", {"factors": [("coherent", {"alpha": alpha}), ("squeezed", {"xi": -r})]}, 60)
    state = fo.evolve("bs", {"theta_bs": phi / 2, "phase": 0.0}, state)
    dist = fo.detect(state, eta)
    w = itf.OBSERVABLES[observable]
    n = np.arange(60)
    o = w[0] * n[:, None] + w[1] * n[None, :]
    m_ref = np.sum(o * dist)
    assert mean == pytest.approx(m_ref, abs=1e-9)
    assert var == pytest.approx(np.sum(o**2 * dist) - m_ref**2, abs=1e-8)


def test_squeezing_threshold_is_golden_ratio_fraction():
    for alpha2 in (1e4, 1e6):
        lam = itf.squeezing_threshold(alpha2)
        assert lam == pytest.approx((3 - np.sqrt(5)) / 2 * alpha2, rel=1e-3)
        assert itf.config_sensitivity(itf.squeezed_mz(alpha2, 0.9 * lam)) < 1 / np.sqrt(alpha2)
        assert itf.config_sensitivity(itf.squeezed_mz(alpha2, 1.1 * lam)) > 1 / np.sqrt(alpha2)


def test_sensitivity_ratio_windows():
    phis = np.linspace(0.05, np.pi - 0.05, 40)
    curve = itf.sensitivity_ratio(itf.squeezed_mz(1e4, 1.0), itf.squeezed_mz(1e4, 0.0), phis)
    assert len(curve) == 40
    assert curve.provenance["windows"]
    lo, hi = curve.provenance["windows"][0]
    assert lo <= np.pi / 2 <= hi
    assert np.all(curve.y[(curve.x >= lo) & (curve.x <= hi)] < 1)


def test_sensitivity_ratio_skips_dark_fringe():
    phis = np.array([0.0, np.pi / 2])
    curve = itf.sensitivity_ratio(itf.squeezed_mz(100, 0.5, observable="Nc"), itf.squeezed_mz(100, 0.0, observable="Nc"), phis)
    assert list(curve.x) == [np.pi / 2]


def test_simulate_fringes_is_seeded():
    cfg = itf.squeezed_mz(1e4, 0.5)
    phis = np.linspace(0.1, 3.0, 7)
    a = itf.simulate_fringes(cfg, phis, 200, seed=4)
    b = itf.simulate_fringes(cfg, phis, 200, seed=4)
    c = itf.simulate_fringes(cfg, phis, 200, seed=5)
    assert a.to_csv_text() == b.to_csv_text() != c.to_csv_text()
    # sample means scatter around the exact fringe by about s / sqrt(shots)
    z = (a.y - a.columns["exact_mean"]) / (a.y_err / np.sqrt(200))
    assert np.all(np.abs(z) < 5)
    with pytest.raises(ValueError):
        itf.simulate_fringes(cfg, phis, 0, seed=1)


@pytest.mark.parametrize(
    "kwargs",
    [{"inputs": (("vacuum", {}),)}, {"first_stage": "mirror"}, {"observable": "N2"}, {"r_int": -1.0},
     {"eta": 1.5}, {"inputs": (("twb", {"lam": 1.0}), ("vacuum", {}))}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        itf.InterferometerConfig(**kwargs)


def test_energy_budget():
    b = itf.EnergyBudget.from_amplitudes(3.0, 1.0, np.arcsinh(2.0), 0.0)
    assert b.n_tot == pytest.approx(14.0)
    assert b.delta == pytest.approx(0.9)
    assert b.beta_tot == pytest.approx(4 / 14)
    assert b.beta == 0.0
    with pytest.raises(ValueError):
        itf.EnergyBudget(n_tot=1.0, delta=0.5, beta_tot=0.2, beta=0.3)


def test_active_stage_uses_opa():
    cfg = itf.InterferometerConfig(inputs=(("vacuum", {}), ("vacuum", {})), first_stage="opa", detection="opa",
                                   observable="D+", r_int=0.5, r_det=0.5, det_phase=np.pi)
    # undone by the second OPA at phi = 0
    assert itf.fringe_observable(cfg, 0.0)[0] == pytest.approx(0.0, abs=1e-12)
    assert itf.fringe_observable(cfg, 1.0)[0] > 0


def test_active_active_optimum():
    n = 100.0
    opt = itf.optimize_configuration("active-active", n, starts=0)
    assert opt.sensitivity == pytest.approx(1 / np.sqrt(n * (n + 2)), rel=1e-3)
    assert itf.config_sensitivity(opt.config, opt.phi) == pytest.approx(opt.sensitivity, rel=1e-6)


def test_squeezed_coherent_vacuum_ansatz():
    n = 100.0
    opt = itf.optimize_configuration("passive-active", n, starts=0, ansatz="sc-vacuum")
    assert opt.sensitivity == pytest.approx((1 + np.sqrt(2)) / (np.sqrt(2) * n), rel=0.02)
    assert opt.params["budget"].n_tot == pytest.approx(n, rel=1e-9)
    assert itf.config_sensitivity(opt.config, opt.phi) == pytest.approx(opt.sensitivity, rel=1e-6)


@pytest.mark.parametrize(
    "args, kwargs",
    [(("both-ways", 10.0), {}), (("active-active", 0.0), {}), (("active-active", 10.0), {"eta": 0.0}),
     (("passive-active", 10.0), {"ansatz": "fancy"})],
)
def test_optimizer_validation(args, kwargs):
    with pytest.raises(ValueError):
        itf.optimize_configuration(*args, **kwargs)
