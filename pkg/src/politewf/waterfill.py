"""Polite water-filling kernels.

Pre- and post-whitening a direct channel by the forward and reverse
interference-plus-noise covariances gives an equivalent single-user channel;
water-filling the equivalent input covariance over it is the structure every
Pareto-optimal transmit covariance carries.  This module provides the
equivalent-channel factorization, water-filling under a power budget and
under a rate target, covariance assembly from the water-filled diagonal, and
a residual that measures how far a covariance is from the structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import herm, inv_sqrt_pd, numerical_rank, sqrt_psd
from .network import NetworkSpec, covariance_matrices, interference_covariance, reverse_network

POWER_MATCH_RTOL = 1e-12
RATE_MATCH_RTOL = 1e-10


@dataclass(frozen=True)
class EquivalentChannel:
    """Doubly whitened direct channel and its thin SVD factors.

    ``delta`` stores the squared singular values; ``matrix = f @
    diag(sqrt(delta)) @ g^H`` up to the numerical rank.
    """

    matrix: np.ndarray
    f: np.ndarray
    g: np.ndarray
    delta: np.ndarray

    @property
    def rank(self) -> int:
        return self.delta.shape[0]


@dataclass(frozen=True)
class PwfDecomposition:
    """Water-filling solution over an equivalent channel."""

    channel: EquivalentChannel
    nu: float
    d: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return np.nonzero(self.d > 0)[0]

    @property
    def power(self) -> float:
        return float(self.d.sum())

    @property
    def rate(self) -> float:
        return float(np.sum(np.log1p(self.d * self.channel.delta)))


def equivalent_channel(omega: np.ndarray, h_direct: np.ndarray, omega_hat: np.ndarray) -> EquivalentChannel:
    """Whiten a direct channel by both interference covariances and factor it."""
    m = inv_sqrt_pd(omega) @ np.asarray(h_direct, dtype=complex) @ inv_sqrt_pd(omega_hat)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    rank = numerical_rank(s, max(m.shape))
    return EquivalentChannel(matrix=m, f=u[:, :rank], g=vh[:rank, :].conj().T, delta=s[:rank] ** 2)


def waterfill_power(delta: np.ndarray, budget: float):
    """Classic water-filling: d_j = (nu - 1/delta_j)^+ with sum(d) = budget."""
    delta = np.asarray(delta, dtype=float)
    if budget < 0:
        raise ValueError("power budget must be nonnegative")
    if delta.size == 0:
        if budget > 0:
            raise ValueError("no subchannels to carry a positive power budget")
        return 0.0, np.zeros(0)
    inv = 1.0 / delta
    order = np.argsort(inv)
    inv_sorted = inv[order]
    n = delta.size
    nu = inv_sorted[0]
    for k in range(n, 0, -1):
        candidate = (budget + inv_sorted[:k].sum()) / k
        if candidate - inv_sorted[k - 1] >= 0:
            nu = candidate
            break
    d = np.maximum(nu - inv, 0.0)
    total = d.sum()
    if abs(total - budget) > POWER_MATCH_RTOL * (1.0 + budget):
        # Renormalize the active set exactly; guards against cancellation.
        active = d > 0
        if active.any():
            d[active] += (budget - total) / active.sum()
            nu = float((d[active] + inv[active]).mean())
    return float(nu), d


def waterfill_rate(delta: np.ndarray, rate_target: float):
    """Water-filling level that meets a rate target exactly.

    Iteratively places the level at the geometric-mean solution of
    ``sum_j log(nu * delta_j) = rate`` over the active set, dropping every
    subchannel that would get negative power and repeating; terminates in
    at most len(delta) passes.
    """
    delta = np.asarray(delta, dtype=float)
    if rate_target < 0:
        raise ValueError("rate target must be nonnegative")
    if delta.size == 0:
        if rate_target > 0:
            raise ValueError("no subchannels to carry a positive rate target")
        return 0.0, np.zeros(0)
    active = np.ones(delta.size, dtype=bool)
    nu = 0.0
    for _ in range(delta.size):
        idx = np.nonzero(active)[0]
        log_nu = (rate_target - np.log(delta[idx]).sum()) / idx.size
        nu = float(np.exp(log_nu))
        d_active = nu - 1.0 / delta[idx]
        if np.all(d_active >= 0):
            break
        active[idx[d_active < 0]] = False
        if not active.any():
            raise ValueError("rate target not attainable on these subchannels")
    d = np.zeros(delta.size)
    idx = np.nonzero(active)[0]
    d[idx] = np.maximum(nu - 1.0 / delta[idx], 0.0)
    achieved = float(np.sum(np.log1p(d * delta)))
    if abs(achieved - rate_target) > RATE_MATCH_RTOL * (1.0 + rate_target):
        raise ArithmeticError("water-filling level failed to meet the rate target")
    return nu, d


def polite_waterfill(omega: np.ndarray, h_direct: np.ndarray, omega_hat: np.ndarray,
                     rate_target: float = None, budget: float = None) -> PwfDecomposition:
    """Water-fill the doubly whitened channel at a rate target or power budget."""
    chan = equivalent_channel(omega, h_direct, omega_hat)
    if (rate_target is None) == (budget is None):
        raise ValueError("specify exactly one of rate_target / budget")
    if rate_target is not None:
        nu, d = waterfill_rate(chan.delta, rate_target)
    else:
        nu, d = waterfill_power(chan.delta, budget)
    return PwfDecomposition(channel=chan, nu=nu, d=d)


def assemble_forward(g: np.ndarray, omega_hat: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Forward covariance from the right singular basis and power diagonal."""
    w = inv_sqrt_pd(omega_hat)
    core = (g * d) @ g.conj().T
    return herm(w @ core @ w)


def assemble_reverse(f: np.ndarray, omega: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Reverse covariance from the left singular basis and power diagonal."""
    w = inv_sqrt_pd(omega)
    core = (f * d) @ f.conj().T
    return herm(w @ core @ w)


def structure_residual(q: np.ndarray, basis: np.ndarray, delta: np.ndarray) -> float:
    """Distance of an equivalent covariance from the water-filling family.

    Measures ``min_{nu >= 0} ||q - basis (nu I - diag(1/delta))^+ basis^H||_F``
    normalized by Tr(q); zero exactly when q is a water-filling over the
    channel with squared singular values delta in the given basis.  With
    repeated singular values, any valid basis gives the same value because
    the family is invariant under rotations within the degenerate blocks.
    """
    q = np.asarray(q, dtype=complex)
    trace = float(np.trace(q).real)
    if trace <= 0:
        return 0.0
    inv = 1.0 / np.asarray(delta, dtype=float)
    diag_q = np.real(np.einsum("ij,jk,ki->i", basis.conj().T, q, basis))

    def objective(nu: float) -> float:
        dd = np.maximum(nu - inv, 0.0)
        return float(np.linalg.norm(q - (basis * dd) @ basis.conj().T))

    # The squared distance is convex and piecewise quadratic in nu; on each
    # interval of constant active set the unconstrained optimum is the mean
    # of (diag_q + 1/delta) over the active subchannels.  Evaluate it at
    # every clamped interval optimum and every breakpoint.
    breakpoints = np.sort(inv)
    candidates = [0.0] + [float(b) for b in breakpoints]
    for k in range(breakpoints.size):
        lo = float(breakpoints[k])
        hi = float(breakpoints[k + 1]) if k + 1 < breakpoints.size else np.inf
        active = inv <= lo * (1 + 1e-12)
        nu_star = float((diag_q[active] + inv[active]).mean())
        candidates.append(min(max(nu_star, lo), hi) if np.isfinite(hi) else max(nu_star, lo))
    best = min(objective(nu) for nu in candidates)
    return best / trace


def pwf_residual(net: NetworkSpec, sigma) -> np.ndarray:
    """Per-link distance from the polite water-filling structure.

    Builds the reverse covariances through the covariance transformation,
    forms both interference covariances and the equivalent channel of each
    link, and projects the equivalent input covariance onto the
    water-filling family.
    """
    from .duality import covariance_transformation

    if not net.is_white:
        raise ValueError("polite water-filling structure is defined on whitened networks")
    mats = covariance_matrices(sigma)
    sigma_hat = covariance_transformation(net, mats)
    rev = reverse_network(net)
    out = np.zeros(net.n_links)
    for l in range(net.n_links):
        omega = interference_covariance(net, mats, l)
        omega_hat = interference_covariance(rev, sigma_hat, l)
        chan = equivalent_channel(omega, net.h[l][l], omega_hat)
        root = sqrt_psd(omega_hat)
        q = herm(root @ mats[l] @ root)
        out[l] = structure_residual(q, chan.g, chan.delta)
    return out
