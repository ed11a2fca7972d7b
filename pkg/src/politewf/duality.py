"""SINR duality and the forward-to-reverse covariance transformation.

If a set of stream SINRs is achievable in the forward links with vectors
(t, r) and powers p, the same SINRs are achievable in the reverse links
with the roles of t and r swapped and powers q solving a linear system in
the cross-talk matrix; total power is preserved.  Stacking the reverse
powers onto the receive vectors maps forward covariances to reverse
covariances that achieve equal or better rates under the same constraint
value.

Everything here assumes a whitened network (identity noise and weights).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import herm
from .network import CovarianceSet, NetworkSpec, covariance_matrices
from .streams import (
    crosstalk,
    decompose_eigen,
    flatten,
    forward_sinrs,
    mmse_sic_receivers,
    split_flat,
    stream_gains,
)

SOLVE_RESIDUAL_RTOL = 1e-10
NEGATIVE_POWER_TOL = 1e-9


class InfeasibleTargetsError(ValueError):
    """The SINR targets are not achievable with the given vectors."""


@dataclass(frozen=True)
class DualScaling:
    """Diagonal scaling of the power-balance system: gamma0 / |r^H H t|^2.

    Streams with a zero target are carried with a zero diagonal entry,
    which drops them from the solve without index bookkeeping.
    """

    gamma0: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma0", np.asarray(self.gamma0, dtype=float))
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=float))
        if self.gamma0.shape != self.gains.shape:
            raise ValueError("target and gain vectors differ in length")
        bad = (self.gamma0 > 0) & (self.gains <= 0)
        if np.any(bad):
            raise InfeasibleTargetsError(
                f"streams {np.nonzero(bad)[0].tolist()} have zero direct gain but positive targets")

    @property
    def diagonal(self) -> np.ndarray:
        d = np.zeros_like(self.gamma0)
        active = self.gamma0 > 0
        d[active] = self.gamma0[active] / self.gains[active]
        return d


def _balance_solve(diag: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Solve (I - diag(d) psi) x = d for nonnegative x.

    This is the regular form of (D^{-1} - psi)^{-1} 1 that stays valid when
    some diagonal entries are zero (inactive streams get zero power).
    """
    n = diag.shape[0]
    a = np.eye(n) - diag[:, None] * psi
    b = diag.copy()
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as err:
        raise InfeasibleTargetsError("targets not achievable with these vectors") from err
    residual = np.linalg.norm(a @ x - b)
    scale = max(1.0, float(np.linalg.norm(b)), float(np.linalg.norm(x)))
    if residual > SOLVE_RESIDUAL_RTOL * scale:
        raise InfeasibleTargetsError("power balance system is ill conditioned")
    scale = max(1.0, float(np.abs(x).max(initial=0.0)))
    if np.any(x < -NEGATIVE_POWER_TOL * scale):
        raise InfeasibleTargetsError("targets not achievable with these vectors")
    return np.maximum(x, 0.0)


def dual_powers(scaling: DualScaling, psi: np.ndarray) -> np.ndarray:
    """Reverse stream powers achieving the targets with swapped vectors."""
    return _balance_solve(scaling.diagonal, psi.T)


def forward_powers(scaling: DualScaling, psi: np.ndarray) -> np.ndarray:
    """Forward stream powers achieving the targets with the same vectors."""
    return _balance_solve(scaling.diagonal, psi)


def covariance_transformation(net: NetworkSpec, sigma) -> CovarianceSet:
    """Map forward covariances to reverse covariances of equal or better rates.

    Pipeline: eigen-decompose each covariance into streams, take MMSE-SIC
    receivers, read off the achieved forward SINRs, solve the dual power
    system at exactly those SINRs, and stack the receive vectors with the
    dual powers.  The reverse set preserves the total transmit power.
    """
    if not net.is_white:
        raise ValueError("covariance transformation assumes a whitened network")
    mats = covariance_matrices(sigma)
    t = []
    p = []
    for m in mats:
        t_l, p_l = decompose_eigen(m)
        t.append(t_l)
        p.append(p_l)
    r = mmse_sic_receivers(net, t, p)
    gamma = forward_sinrs(net, t, r, p)
    scaling = DualScaling(gamma0=flatten(gamma), gains=flatten(stream_gains(net, t, r)))
    psi = crosstalk(net, t, r)
    q_flat = dual_powers(scaling, psi)
    counts = [m.shape[1] for m in t]
    q = split_flat(q_flat, counts)
    out = []
    for l in range(net.n_links):
        s = (r[l] * q[l]) @ r[l].conj().T if counts[l] else np.zeros((net.rx_antennas(l),) * 2, dtype=complex)
        out.append(herm(s))
    return CovarianceSet.clamped(out)
