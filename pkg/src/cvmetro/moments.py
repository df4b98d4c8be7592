"""Photon-number statistics of Gaussian states via Wick's theorem.

Every field operator is split as ``a_k = <a_k> + da_k``.  Observables are kept
as polynomials in the zero-mean fluctuation operators ``da_k, da_k^dag`` with
c-number coefficients, so large coherent amplitudes only ever appear in the
coefficients and central moments are formed without cancelling huge raw
moments.  Expectations of ordered fluctuation words are sums over all
pairings of the two-point contractions ``<dO_i dO_j>`` (i < j).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .gaussian_core import GaussianState, omega

__all__ = [
    "MAX_ORDER",
    "OpPoly",
    "MomentRequest",
    "NumberStats",
    "GaussianFields",
    "pairings",
    "wick_moment",
    "number_stats",
    "nrf",
    "weighted_number_moments",
]

MAX_ORDER = 8


def label(mode: int, dagger: bool) -> int:
    return 2 * mode + int(bool(dagger))


class OpPoly:
    """Linear combination of ordered operator words.

    ``terms`` maps a tuple of integer labels (``2*mode + dagger``) to a
    complex coefficient; the empty tuple is the identity.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = dict(terms or {})

    @classmethod
    def scalar(cls, value) -> "OpPoly":
        return cls({(): complex(value)})

    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0.0) + c
        return OpPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return OpPoly({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if not isinstance(other, OpPoly):
            return OpPoly({w: c * other for w, c in self.terms.items()})
        out = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                out[w] = out.get(w, 0.0) + c1 * c2
        return OpPoly(out)

    def __rmul__(self, other):
        return OpPoly({w: other * c for w, c in self.terms.items()})

    def __pow__(self, k: int):
        out = OpPoly.scalar(1.0)
        for _ in range(k):
            out = out * self
        return out

    def dagger(self) -> "OpPoly":
        return OpPoly(
            {tuple(x ^ 1 for x in reversed(w)): np.conj(c) for w, c in self.terms.items()}
        )

    def order(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def __repr__(self):
        return f"OpPoly({len(self.terms)} terms, order {self.order()})"


def _as_poly(x) -> OpPoly:
    return x if isinstance(x, OpPoly) else OpPoly.scalar(x)


@lru_cache(maxsize=None)
def pairings(n: int) -> np.ndarray:
    """All perfect matchings of ``range(n)`` as an array ``(count, n//2, 2)``.

    Each pair is ordered ``(i, j)`` with ``i < j``.
    """
    if n % 2:
        return np.zeros((0, n // 2, 2), dtype=int)
    if n == 0:
        return np.zeros((1, 0, 2), dtype=int)

    def rec(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for k, partner in enumerate(rest):
            for tail in rec(rest[:k] + rest[k + 1 :]):
                yield [(first, partner)] + tail

    return np.array(list(rec(tuple(range(n)))), dtype=int).reshape(-1, n // 2, 2)


class GaussianFields:
    """Field operators of a Gaussian state in fluctuation form.

    Attributes
    ----------
    means : ndarray of complex, shape (2n,)
        ``<O_l>`` for label ``l`` (``a_k`` then ``a_k^dag``).
    contractions : ndarray of complex, shape (2n, 2n)
        ``G[l, m] = <dO_l dO_m>`` (ordered, not symmetrised).
    """

    def __init__(self, state: GaussianState):
        n = state.n_modes
        self.n_modes = n
        amps = state.amplitudes()
        means = np.empty(2 * n, dtype=complex)
        means[0::2] = amps
        means[1::2] = np.conj(amps)
        self.means = means
        # rows express a_k, a_k^dag in quadratures: (x + i p)/2, (x - i p)/2
        c = np.zeros((2 * n, 2 * n), dtype=complex)
        for k in range(n):
            c[2 * k, 2 * k], c[2 * k, 2 * k + 1] = 0.5, 0.5j
            c[2 * k + 1, 2 * k], c[2 * k + 1, 2 * k + 1] = 0.5, -0.5j
        self.contractions = c @ (state.cov + 1j * omega(n)) @ c.T

    def a(self, mode: int) -> OpPoly:
        lab = label(mode, False)
        return OpPoly({(): self.means[lab], (lab,): 1.0})

    def adag(self, mode: int) -> OpPoly:
        lab = label(mode, True)
        return OpPoly({(): self.means[lab], (lab,): 1.0})

    def op(self, mode: int, dagger: bool) -> OpPoly:
        return self.adag(mode) if dagger else self.a(mode)

    def number(self, mode: int) -> OpPoly:
        return self.adag(mode) * self.a(mode)

    def expect(self, poly: OpPoly) -> complex:
        """Exact expectation value of a fluctuation polynomial."""
        by_len: dict[int, list] = {}
        for w, c in poly.terms.items():
            if c == 0:
                continue
            if len(w) > MAX_ORDER:
                raise ValueError(
                    f"operator word of length {len(w)} exceeds cap {MAX_ORDER}"
                )
            by_len.setdefault(len(w), []).append((w, c))
        total = 0.0 + 0.0j
        g = self.contractions
        for length, items in by_len.items():
            coeffs = np.array([c for _, c in items], dtype=complex)
            if length == 0:
                total += coeffs.sum()
                continue
            if length % 2:
                continue
            words = np.array([w for w, _ in items], dtype=int)
            pr = pairings(length)
            left = words[:, pr[..., 0]]
            right = words[:, pr[..., 1]]
            vals = np.prod(g[left, right], axis=2).sum(axis=1)
            total += coeffs @ vals
        return complex(total)

    def central(self, poly: OpPoly) -> OpPoly:
        """``poly - <poly>`` with the constant absorbed into the identity word."""
        return poly - self.expect(poly)

    def variance(self, poly: OpPoly) -> float:
        d = self.central(poly)
        return float(self.expect(d * d).real)

    def covariance(self, p: OpPoly, q: OpPoly) -> float:
        """Symmetrised covariance of two observables."""
        dp, dq = self.central(p), self.central(q)
        return float(0.5 * (self.expect(dp * dq) + self.expect(dq * dp)).real)


@dataclass(frozen=True)
class MomentRequest:
    """Ordered product of mode operators, e.g. ``[(0, True), (0, False)]``."""

    monomial: tuple

    def __post_init__(self):
        mono = tuple((int(m), bool(d)) for m, d in self.monomial)
        if len(mono) > MAX_ORDER:
            raise ValueError(
                f"monomial has {len(mono)} operators, cap is {MAX_ORDER}"
            )
        object.__setattr__(self, "monomial", mono)


def wick_moment(state: GaussianState, req) -> complex:
    """Expectation of an ordered monomial of ``a``/``a^dag`` on ``state``."""
    if not isinstance(req, MomentRequest):
        req = MomentRequest(tuple(req))
    fields = GaussianFields(state)
    poly = OpPoly.scalar(1.0)
    for mode, dag in req.monomial:
        if not 0 <= mode < state.n_modes:
            raise IndexError(f"mode {mode} out of range")
        poly = poly * fields.op(mode, dag)
    return fields.expect(poly)


@dataclass(frozen=True)
class NumberStats:
    means: dict
    variances: dict
    covariances: dict

    def __post_init__(self):
        for k, v in self.variances.items():
            if v < -1e-9 * max(1.0, abs(self.means[k])):
                raise ValueError(f"negative variance {v} for mode {k}")


def number_stats(state: GaussianState, pairs=(), modes=None) -> NumberStats:
    """Means, variances and pairwise covariances of photon numbers."""
    fields = GaussianFields(state)
    modes = range(state.n_modes) if modes is None else modes
    pairs = list(pairs)
    if pairs and state.n_modes < 2:
        raise ValueError("covariances need at least two modes")
    nums = {k: fields.number(k) for k in set(modes) | {m for p in pairs for m in p}}
    means = {k: float(fields.expect(nums[k]).real) for k in nums}
    variances = {k: fields.variance(nums[k]) for k in nums}
    covs = {tuple(p): fields.covariance(nums[p[0]], nums[p[1]]) for p in pairs}
    return NumberStats(means, variances, covs)


def nrf(state: GaussianState, sign: int = -1, modes=(0, 1)) -> float:
    """Noise reduction factor ``var(N1 +/- N2) / <N1 + N2>``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    fields = GaussianFields(state)
    n1, n2 = fields.number(modes[0]), fields.number(modes[1])
    total = float(fields.expect(n1 + n2).real)
    if total <= 0:
        raise ZeroDivisionError("no photons reach the detectors")
    return fields.variance(n1 + sign * n2) / total


def weighted_number_moments(state: GaussianState, weights) -> tuple[float, float]:
    """Mean and variance of ``sum_k w_k N_k`` in closed form.

    With ``N_k = (x_k^2 + p_k^2 - 2)/4`` the observable is a quadratic form
    ``r^T M r / 4`` and its Gaussian variance needs only traces of ``V`` and
    ``M``.  This is the fast path used inside optimisation loops; it agrees
    with the Wick engine exactly.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (state.n_modes,):
        raise ValueError("one weight per mode required")
    mdiag = np.repeat(w, 2)
    v, m = state.cov, state.mean
    mv = mdiag[:, None] * v
    om = mdiag[:, None] * omega(state.n_modes)
    mean = 0.25 * (np.trace(mv) + m @ (mdiag * m)) - 0.5 * w.sum()
    var = (
        2.0 * np.sum(mv * mv.T) + 2.0 * np.sum(om * om.T) + 4.0 * (mdiag * m) @ v @ (mdiag * m)
    ) / 16.0
    return float(mean), float(var)


def all_number_moments(state: GaussianState, max_total: int = 4) -> dict:
    """``<N_0^i N_1^j ...>`` for all exponent tuples with total ``<= max_total``."""
    fields = GaussianFields(state)
    n = state.n_modes
    nums = [fields.number(k) for k in range(n)]
    out = {}
    for total in range(1, max_total + 1):
        for combo in _compositions(total, n):
            poly = OpPoly.scalar(1.0)
            for k, p in enumerate(combo):
                poly = poly * nums[k] ** p
            out[combo] = float(fields.expect(poly).real)
    return out


def _compositions(total, parts):
    for cuts in combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for c in cuts + (total + parts - 1,):
            out.append(c - prev - 1)
            prev = c
        yield tuple(out)
