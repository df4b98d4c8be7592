from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cvmetro import illumination as il

C = il.IlluminationConfig


@pytest.mark.parametrize(
    "kwargs",
    [{"source": "laser"}, {"mu": 0.0}, {"n_b": -1.0}, {"m_b": 0}, {"modes": 0}, {"pixels": 1}, {"eta": 1.5}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        C(**kwargs)


def test_sampling_is_seeded():
    cfg = C(pixels=500)
    a, b = il.sample_counts(cfg), il.sample_counts(cfg)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    c = il.sample_counts(replace(cfg, seed=1))
    assert not np.array_equal(a[0], c[0])
    assert il.sample_counts(cfg, trials=3)[0].shape == (3, 500)


def test_background_drawn_last_shares_source_photons():
    cfg = C(pixels=300)
    ref_a, probe_a = il.sample_counts(replace(cfg, m_b=57))
    ref_b, probe_b = il.sample_counts(replace(cfg, m_b=1300))
    assert np.array_equal(ref_a, ref_b)
    assert not np.array_equal(probe_a, probe_b)


@pytest.mark.parametrize("source", il.SOURCES)
@pytest.mark.parametrize("present", [True, False])
def test_sample_moments_match_engine(source, present):
    cfg = C(source=source, pixels=20000, n_b=3.0, m_b=57, object_present=present, seed=11)
    n1, n2 = il.sample_counts(cfg, trials=20)
    exact = il.analytic_moments(cfg)
    delta = il.covariance_statistic(n1, n2)
    se = delta.std(ddof=1) / np.sqrt(delta.size)
    assert abs(delta.mean() - exact["cov"]) < 5 * se
    for key, data in (("mean_ref", n1), ("mean_probe", n2)):
        m = data.mean(axis=-1)
        assert abs(m.mean() - exact[key]) < 5 * m.std(ddof=1) / np.sqrt(m.size)
    assert n1.var(axis=-1).mean() == pytest.approx(exact["var_ref"], rel=0.02)
    assert n2.var(axis=-1).mean() == pytest.approx(exact["var_probe"], rel=0.02)


def test_analytic_covariance_closed_forms():
    t, mu, eta = 1000, 0.075, 0.8
    q = il.analytic_moments(C(source="twb", modes=t, mu=mu, eta=eta))
    c = il.analytic_moments(C(source="classical", modes=t, mu=mu, eta=eta))
    # twin beam: eta * eta/2 * mu (mu + 1); split thermal: eta * eta/2 * mu^2
    assert q["cov"] == pytest.approx(t * eta * eta / 2 * mu * (mu + 1), rel=1e-12)
    assert c["cov"] == pytest.approx(t * eta * eta / 2 * mu**2, rel=1e-12)
    assert q["mean_ref"] == pytest.approx(c["mean_ref"])
    assert il.analytic_moments(C(object_present=False))["cov"] == pytest.approx(0.0, abs=1e-12)


def test_covariance_statistic():
    x = np.array([[1.0, 2.0, 3.0, 4.0]])
    assert il.covariance_statistic(x, 2 * x)[0] == pytest.approx(2 * np.var(x))
    with pytest.raises(ValueError):
        il.covariance_statistic([1.0], [2.0])


def test_decide_on_known_gaussians():
    rng = np.random.default_rng(0)
    d_in = stats.norm.ppf((np.arange(4000) + 0.5) / 4000, 1.0, 1.0)
    d_out = stats.norm.ppf((np.arange(4000) + 0.5) / 4000, -1.0, 1.0)
    rng.shuffle(d_in)
    t, log_p, fit_in, fit_out = il.decide(d_in, d_out)
    assert t == pytest.approx(0.0, abs=1e-3)
    assert np.exp(log_p) == pytest.approx(stats.norm.cdf(-1.0), rel=1e-2)
    # swapping the hypotheses mirrors the threshold
    t2, log_p2, _, _ = il.decide(d_out + 0.5, d_in + 0.5)
    assert t2 == pytest.approx(0.5, abs=1e-3) and log_p2 == pytest.approx(log_p, rel=1e-6)


def test_decide_far_tails_stay_finite():
    d_in = np.linspace(99, 101, 50)
    d_out = np.linspace(-1, 1, 50)
    _, log_p, _, _ = il.decide(d_in, d_out)
    assert np.isfinite(log_p) and log_p / np.log(10) < -300


@pytest.mark.parametrize("d_in, d_out", [(np.ones(5), np.arange(5.0)), (np.arange(5.0), np.arange(5.0))])
def test_decide_rejects_degenerate(d_in, d_out):
    with pytest.raises(ValueError):
        il.decide(d_in, d_out)


@settings(max_examples=30, deadline=None)
@given(shift=st.floats(0.1, 5.0), scale=st.floats(0.2, 3.0))
def test_decide_error_below_half(shift, scale):
    base = stats.norm.ppf((np.arange(200) + 0.5) / 200)
    _, log_p, _, _ = il.decide(shift + scale * base, base)
    assert log_p < np.log(0.5)


def test_error_probability_quantum_beats_classical():
    base = C(pixels=2000, n_b=1.0, m_b=57, seed=3)
    q = il.error_probability(replace(base, source="twb"), trials=100)
    c = il.error_probability(replace(base, source="classical"), trials=100)
    assert q.log10_p_err < c.log10_p_err
    assert q.p_err == pytest.approx(10**q.log10_p_err)
    assert il.bootstrap_log10_error(c, resamples=20) > 0
    with pytest.raises(ValueError):
        il.error_probability(base, trials=50)


def test_small_sweep_and_gap_difference():
    base = C(pixels=1000, seed=5)
    sweep = il.advantage_sweep(base, [1.0, 10.0], [57, 1300], trials=100)
    assert len(sweep.results) == 8
    gap = sweep.log10_gap(57)
    assert gap.shape == (2,) and np.all(gap > 0)
    out = sweep.gap_difference(1300, 57, resamples=10, seed=1)
    assert set(out) == {"pooled", "pooled_std", "per_point", "per_point_std"}
    assert out["pooled_std"] > 0
    assert np.allclose(out["per_point"], sweep.log10_gap(1300) - sweep.log10_gap(57))
