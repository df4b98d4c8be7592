import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvmetro import fock_oracle as fo


def bernoulli_convolution(n, eta):
    """Distribution of the number of successes in n Bernoulli(eta) trials."""
    dist = [Fraction(1)] if isinstance(eta, Fraction) else [1.0]
    for _ in range(n):
        nxt = [0 * dist[0]] * (len(dist) + 1)
        for k, p in enumerate(dist):
            nxt[k] += p * (1 - eta)
            nxt[k + 1] += p * eta
        dist = nxt
    return dist


@pytest.mark.parametrize("alpha", [0.5, 1.2 * np.exp(0.4j)])
def test_coherent_is_poissonian(alpha):
    p = fo.photon_distribution(fo.build_fock("coherent", {"alpha": alpha}, 40))
    mu = abs(alpha) ** 2
    n = np.arange(40)
    expected = np.exp(-mu) * mu**n / np.array([math.factorial(int(k)) for k in n], dtype=float)
    assert np.allclose(p, expected, atol=1e-14)


@pytest.mark.parametrize("xi", [0.3, 0.6j, -0.8])
def test_squeezed_vacuum_even_support_and_mean(xi):
    state = fo.build_fock("squeezed", {"xi": xi}, 80)
    p = fo.photon_distribution(state)
    assert np.all(p[1::2] == 0)
    assert fo.number_moment(p, (1,)) == pytest.approx(np.sinh(abs(xi)) ** 2, rel=1e-10)


def test_twin_beam_is_diagonal_thermal():
    lam = 0.4
    p = fo.photon_distribution(fo.build_fock("twb", {"lam": lam, "phase": 0.3}, 60))
    assert np.allclose(p, np.diag(np.diag(p)))
    n = np.arange(60)
    assert np.allclose(np.diag(p), lam**n / (1 + lam) ** (n + 1), atol=1e-14)


def test_product_state_factorises():
    state = fo.build_fock("product", {"factors": [("fock", {"n": 2}), ("coherent", {"alpha": 0.5})]}, 20)
    p = fo.photon_distribution(state)
    assert p.shape == (20, 20)
    assert np.allclose(p[2], fo.photon_distribution(fo.build_fock("coherent", {"alpha": 0.5}, 20)))


@pytest.mark.parametrize("kind, params", [("thermal", {"n": 1}), ("twb", {"lam": -1.0})])
def test_bad_states(kind, params):
    with pytest.raises(ValueError):
        fo.build_fock(kind, params, 10)


def test_truncation_leak_is_reported():
    with pytest.raises(fo.TruncationError):
        fo.build_fock("coherent", {"alpha": 5.0}, 10)
    with pytest.warns(RuntimeWarning, match="leak"):
        out = fo.evolve("sq2", {"xi": 0.8}, fo.build_fock("product", {"factors": [("vacuum", {})] * 2}, 14))
    assert 1e-6 < out.leak < 1e-4
    with pytest.raises(fo.TruncationError):
        fo.evolve("sq2", {"xi": 0.8}, fo.build_fock("product", {"factors": [("vacuum", {})] * 2}, 10))


def test_unknown_operation():
    with pytest.raises(ValueError):
        fo.evolve("kerr", {}, fo.build_fock("vacuum", {}, 5), (0,))
    with pytest.raises(ValueError):
        fo.evolve("bs", {"theta_bs": 0.1}, fo.build_fock("product", {"factors": [("vacuum", {})] * 2}, 5),
                  method="magic")


@settings(max_examples=25, deadline=None)
@given(theta=st.floats(0.0, np.pi / 2), phase=st.floats(0.0, 2 * np.pi))
def test_beam_splitter_preserves_total_number_exactly(theta, phase):
    state = fo.build_fock("product", {"factors": [("fock", {"n": 3}), ("fock", {"n": 2})]}, 12)
    out = fo.evolve("bs", {"theta_bs": theta, "phase": phase}, state)
    p = fo.photon_distribution(out)
    total = np.add.outer(np.arange(12), np.arange(12))
    assert p[total != 5].sum() < 1e-13
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_hong_ou_mandel_dip():
    state = fo.build_fock("product", {"factors": [("fock", {"n": 1}), ("fock", {"n": 1})]}, 6)
    p = fo.photon_distribution(fo.evolve("bs", {"theta_bs": np.pi / 4, "phase": 0.0}, state))
    assert p[1, 1] < 1e-14
    assert p[2, 0] == pytest.approx(0.5) and p[0, 2] == pytest.approx(0.5)


@pytest.mark.parametrize("xi", [0.2, 0.4 * np.exp(1j)])
def test_two_mode_squeezer_methods_agree(xi):
    vac = fo.build_fock("product", {"factors": [("vacuum", {})] * 2}, 40)
    a = fo.evolve("sq2", {"xi": xi}, vac, method="factored")
    b = fo.evolve("sq2", {"xi": xi}, vac, method="generator")
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-10)
    twb = fo.build_fock("twb", {"lam": np.sinh(abs(xi)) ** 2, "phase": np.angle(xi)}, 40)
    assert abs(np.vdot(twb.amplitudes, a.amplitudes)) == pytest.approx(1.0, abs=1e-10)


def test_single_mode_squeezer_matches_closed_form():
    vac = fo.build_fock("vacuum", {}, 60)
    out = fo.evolve("sq1", {"xi": 0.5j}, vac, (0,))
    ref = fo.build_fock("squeezed", {"xi": 0.5j}, 60)
    assert abs(np.vdot(ref.amplitudes, out.amplitudes)) == pytest.approx(1.0, abs=1e-10)


def test_displacement_gives_coherent_state():
    out = fo.build_fock("displaced_squeezed", {"alpha": 0.7 - 0.2j, "xi": 0.0}, 40)
    ref = fo.build_fock("coherent", {"alpha": 0.7 - 0.2j}, 40)
    assert np.allclose(out.amplitudes, ref.amplitudes, atol=1e-12)


def test_moment_ordering():
    state = fo.build_fock("coherent", {"alpha": 1.5j}, 40)
    assert fo.moment(state, [(0, False)]) == pytest.approx(1.5j)
    assert fo.moment(state, [(0, True), (0, False)]) == pytest.approx(2.25)
    assert fo.moment(state, [(0, False), (0, True)]) == pytest.approx(3.25)
    with pytest.raises(IndexError):
        fo.moment(state, [(1, False)])


@pytest.mark.parametrize("n", range(0, 11))
@pytest.mark.parametrize("eta", [Fraction(1, 3), Fraction(9, 10)])
def test_detect_exact_on_fock_inputs(n, eta):
    p = np.zeros(12, dtype=object)
    p[:] = Fraction(0)
    p[n] = Fraction(1)
    out = fo.detect(p, eta)
    expected = bernoulli_convolution(n, eta) + [Fraction(0)] * (12 - n - 1)
    assert list(out) == expected


def test_detect_two_mode_keeps_correlations():
    p = fo.photon_distribution(fo.build_fock("twb", {"lam": 0.3}, 30))
    out = fo.detect(p, [1.0, 0.5])
    assert np.allclose(out.sum(axis=1), np.diag(p))
    assert fo.number_moment(out, (1, 1)) == pytest.approx(0.5 * fo.number_moment(p, (1, 1)))


@settings(max_examples=40, deadline=None)
@given(eta=st.floats(0.0, 1.0), n=st.integers(0, 30))
def test_thinning_columns_are_distributions(eta, n):
    b = fo.thinning_matrix(40, eta)
    assert b[:, n].sum() == pytest.approx(1.0, abs=1e-12)
    assert np.dot(np.arange(40), b[:, n]) == pytest.approx(eta * n, abs=1e-10)


def test_thinning_rejects_bad_efficiency():
    with pytest.raises(ValueError):
        fo.thinning_matrix(5, 1.5)
