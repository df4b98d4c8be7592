"""Multimode Gaussian states in the (x1, p1, ..., xn, pn) quadrature ordering.

Quadratures are ``x = a + a^dag`` and ``p = -i (a - a^dag)``, so the vacuum
covariance matrix is the identity and ``[x, p] = 2i``.  Operations are stored
as Heisenberg-picture maps on the mode operators, which act on the first and
second moments exactly like the corresponding Schroedinger evolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GaussianState",
    "SymplecticOp",
    "LossChannel",
    "omega",
    "make_state",
    "vacuum",
    "coherent",
    "squeezed",
    "thermal",
    "twin_beam",
    "tensor",
    "beam_splitter",
    "phase_shift",
    "single_mode_squeezer",
    "two_mode_squeezer",
    "displacement",
    "op_from_bogoliubov",
    "apply",
    "apply_loss",
]


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form for ``n_modes`` modes in xpxp ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class GaussianState:
    """First moments and covariance matrix of an n-mode Gaussian state.

    Attributes
    ----------
    mean : ndarray, shape (2n,)
        Quadrature means ``<x_k>, <p_k>``; a coherent amplitude ``alpha``
        has ``<x> = 2 Re(alpha)``, ``<p> = 2 Im(alpha)``.
    cov : ndarray, shape (2n, 2n)
        Symmetrised covariance ``(<{dr_i, dr_j}>)/2``; vacuum is identity.
    """

    mean: np.ndarray
    cov: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if mean.size % 2 or cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"inconsistent shapes: mean {mean.shape}, cov {cov.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("non-finite moments")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise ValueError("covariance matrix is not symmetric")
        mean.setflags(write=False)
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "n_modes", mean.size // 2)

    def amplitudes(self) -> np.ndarray:
        """Complex mean fields ``<a_k>``."""
        return 0.5 * (self.mean[0::2] + 1j * self.mean[1::2])

    def reduced(self, modes) -> "GaussianState":
        idx = _quadrature_indices(modes, self.n_modes)
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def mean_photons(self) -> np.ndarray:
        """``<a_k^dag a_k>`` for every mode."""
        diag = np.diag(self.cov)
        return (
            0.25 * (diag[0::2] + diag[1::2] - 2.0)
            + np.abs(self.amplitudes()) ** 2
        )

    def quadrature_moments(self, mode: int, theta: float) -> tuple[float, float]:
        """Mean and variance of ``X_theta = a e^{-i theta} + a^dag e^{i theta}``."""
        v = np.array([np.cos(theta), np.sin(theta)])
        i = 2 * mode
        m = float(v @ self.mean[i : i + 2])
        var = float(v @ self.cov[i : i + 2, i : i + 2] @ v)
        return m, var

    def is_physical(self, tol: float = 1e-9) -> bool:
        """Check the uncertainty principle ``cov + i Omega >= 0``."""
        herm = self.cov + 1j * omega(self.n_modes)
        return bool(np.min(np.linalg.eigvalsh(herm)) >= -tol)

    def purity_det(self) -> float:
        """``det(cov)``; equals 1 for pure states in this normalisation."""
        return float(np.linalg.det(self.cov))

    def is_pure(self, tol: float = 1e-6) -> bool:
        return abs(self.purity_det() - 1.0) <= tol


@dataclass(frozen=True)
class SymplecticOp:
    """Affine symplectic map ``r -> S r + d`` on ``n`` modes."""

    matrix: np.ndarray
    displacement: np.ndarray = None

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"bad symplectic matrix shape {s.shape}")
        d = (
            np.zeros(s.shape[0])
            if self.displacement is None
            else np.asarray(self.displacement, dtype=float).reshape(-1)
        )
        if d.shape != (s.shape[0],):
            raise ValueError("displacement length mismatch")
        s.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "matrix", s)
        object.__setattr__(self, "displacement", d)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def symplectic_error(self) -> float:
        s = self.matrix
        om = omega(self.n_modes)
        return float(np.max(np.abs(s @ om @ s.T - om)))

    def then(self, other: "SymplecticOp") -> "SymplecticOp":
        """Composite map: apply ``self`` first, then ``other``."""
        return SymplecticOp(
            other.matrix @ self.matrix,
            other.matrix @ self.displacement + other.displacement,
        )


@dataclass(frozen=True)
class LossChannel:
    """Pure-loss channel with per-mode transmissivity ``eta``."""

    eta: tuple

    def __post_init__(self):
        eta = tuple(float(e) for e in np.atleast_1d(self.eta))
        if any(not (0.0 <= e <= 1.0) for e in eta):
            raise ValueError(f"transmissivity out of [0, 1]: {eta}")
        object.__setattr__(self, "eta", eta)


def _quadrature_indices(modes, n_modes):
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated mode indices {modes}")
    for m in modes:
        if not 0 <= m < n_modes:
            raise IndexError(f"mode {m} out of range for {n_modes} modes")
    return np.array([q for m in modes for q in (2 * m, 2 * m + 1)], dtype=int)


# -- state constructors -------------------------------------------------------


def vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def coherent(alpha: complex) -> GaussianState:
    alpha = complex(alpha)
    return GaussianState([2 * alpha.real, 2 * alpha.imag], np.eye(2))


def squeezed(alpha: complex = 0.0, xi: complex = 0.0) -> GaussianState:
    """Displaced squeezed state ``D(alpha) S(xi) |0>``."""
    op = single_mode_squeezer(xi).then(displacement(alpha))
    return apply(op, vacuum(1))


def thermal(n_mean: float) -> GaussianState:
    if not np.isfinite(n_mean) or n_mean < 0:
        raise ValueError(f"thermal mean photon number must be >= 0, got {n_mean}")
    return GaussianState(np.zeros(2), (2 * n_mean + 1) * np.eye(2))


def twin_beam(n_mean: float, phase: float = 0.0) -> GaussianState:
    """Two-mode squeezed vacuum with ``n_mean`` photons in each beam."""
    if not np.isfinite(n_mean) or n_mean < 0:
        raise ValueError(f"twin-beam photon number must be >= 0, got {n_mean}")
    r = np.arcsinh(np.sqrt(n_mean))
    return apply(two_mode_squeezer(r * np.exp(1j * phase)), vacuum(2))


def tensor(*states: GaussianState) -> GaussianState:
    mean = np.concatenate([s.mean for s in states])
    n = mean.size
    cov = np.zeros((n, n))
    i = 0
    for s in states:
        k = s.mean.size
        cov[i : i + k, i : i + k] = s.cov
        i += k
    return GaussianState(mean, cov)


def make_state(kind: str, **params) -> GaussianState:
    """Build a named state.

    ``kind`` is one of ``vacuum`` (``modes``), ``coherent`` (``alpha``),
    ``squeezed`` (``alpha``, ``xi``), ``thermal`` (``n``) or ``twb``
    (``lam``: mean photons per beam, optional ``phase``).
    """
    for key, val in params.items():
        if not np.all(np.isfinite(np.asarray(val, dtype=complex))):
            raise ValueError(f"non-finite parameter {key}={val!r}")
    if kind == "vacuum":
        return vacuum(params.get("modes", 1))
    if kind == "coherent":
        return coherent(params["alpha"])
    if kind == "squeezed":
        return squeezed(params.get("alpha", 0.0), params.get("xi", 0.0))
    if kind == "thermal":
        return thermal(params["n"])
    if kind == "twb":
        return twin_beam(params["lam"], params.get("phase", 0.0))
    raise ValueError(f"unknown state kind {kind!r}")


# -- operations ---------------------------------------------------------------


def op_from_bogoliubov(u, v=None) -> SymplecticOp:
    """Symplectic matrix of the mode map ``a_out = U a + V a^dag``."""
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    n = u.shape[0]
    v = np.zeros_like(u) if v is None else np.atleast_2d(np.asarray(v, dtype=complex))
    plus, minus = u + v, u - v
    s = np.zeros((2 * n, 2 * n))
    s[0::2, 0::2] = plus.real
    s[0::2, 1::2] = -minus.imag
    s[1::2, 0::2] = plus.imag
    s[1::2, 1::2] = minus.real
    return SymplecticOp(s)


def beam_splitter(theta_bs: float, phase: float = 0.0) -> SymplecticOp:
    """``a -> a cos(t) + b e^{i phase} sin(t)``, ``b -> b cos(t) - a e^{-i phase} sin(t)``.

    Transmissivity is ``cos(theta_bs)**2``.
    """
    c, s = np.cos(theta_bs), np.sin(theta_bs)
    u = np.array([[c, np.exp(1j * phase) * s], [-np.exp(-1j * phase) * s, c]])
    return op_from_bogoliubov(u)


def phase_shift(varphi: float) -> SymplecticOp:
    """``a -> a e^{-i varphi}``."""
    return op_from_bogoliubov([[np.exp(-1j * varphi)]])


def single_mode_squeezer(xi: complex) -> SymplecticOp:
    """``a -> cosh(r) a + e^{i psi} sinh(r) a^dag`` for ``xi = r e^{i psi}``."""
    r, psi = abs(xi), np.angle(xi)
    return op_from_bogoliubov([[np.cosh(r)]], [[np.exp(1j * psi) * np.sinh(r)]])


def two_mode_squeezer(xi: complex) -> SymplecticOp:
    """``a -> mu a + nu b^dag``, ``b -> mu b + nu a^dag``."""
    r, psi = abs(xi), np.angle(xi)
    mu, nu = np.cosh(r), np.exp(1j * psi) * np.sinh(r)
    return op_from_bogoliubov(mu * np.eye(2), [[0, nu], [nu, 0]])


def displacement(alpha: complex) -> SymplecticOp:
    alpha = complex(alpha)
    return SymplecticOp(np.eye(2), [2 * alpha.real, 2 * alpha.imag])


def apply(op: SymplecticOp, state: GaussianState, mode_indices=None) -> GaussianState:
    """Apply ``op`` to the listed modes of ``state`` (default: leading modes)."""
    if mode_indices is None:
        mode_indices = range(op.n_modes)
    mode_indices = list(mode_indices)
    if len(mode_indices) != op.n_modes:
        raise ValueError(
            f"operation acts on {op.n_modes} modes, got indices {mode_indices}"
        )
    idx = _quadrature_indices(mode_indices, state.n_modes)
    s_full = np.eye(2 * state.n_modes)
    s_full[np.ix_(idx, idx)] = op.matrix
    d_full = np.zeros(2 * state.n_modes)
    d_full[idx] = op.displacement
    return GaussianState(s_full @ state.mean + d_full, s_full @ state.cov @ s_full.T)


def apply_loss(channel: LossChannel | float, state: GaussianState, mode_indices=None):
    """Mix the listed modes with vacuum at transmissivity ``eta``."""
    if not isinstance(channel, LossChannel):
        channel = LossChannel(channel)
    if mode_indices is None:
        mode_indices = range(state.n_modes)
    mode_indices = list(mode_indices)
    eta = channel.eta
    if len(eta) == 1:
        eta = eta * len(mode_indices)
    if len(eta) != len(mode_indices):
        raise ValueError("one transmissivity per mode required")
    idx = _quadrature_indices(mode_indices, state.n_modes)
    scale = np.ones(2 * state.n_modes)
    scale[idx] = np.repeat(eta, 2)
    root = np.sqrt(scale)
    cov = root[:, None] * state.cov * root[None, :] + np.diag(1.0 - scale)
    return GaussianState(root * state.mean, cov)
