"""Simulated distributed power minimization with per-node agents.

Each link has a transmitter agent and a receiver agent.  In a forward half
round every transmitter water-fills its own doubly whitened channel onto a
(possibly inflated) rate target using only its direct channel and the two
interference covariances estimated in earlier half rounds, then enforces its
transmit power cap by lowering the water level.  Receivers mirror the step
in the reverse half round.  The environment computes the true interference
covariances between half rounds and hands them back to the agents, either
exactly or through an additive Hermitian estimation-noise model.

With exact estimation, no binding caps and zero-initialized reverse
covariances, the trajectory coincides with the centralized alternation of
``algorithm_pr1`` half step by half step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import complex_gaussian, herm
from .network import NetworkSpec, all_link_rates, interference_covariance, reverse_network
from .solvers import IterateRecord, SolveReport, Targets, STATUS_CONVERGED, STATUS_MAX_ITERS
from .waterfill import assemble_forward, polite_waterfill, waterfill_power

CAP_SLACK = 1e-9


@dataclass(frozen=True)
class PrdRound:
    """State snapshot after one half round."""

    step: float
    direction: str
    per_link_power: np.ndarray
    cap_bound: np.ndarray
    rates: np.ndarray
    sum_power: float


def _estimate(m: np.ndarray, noise: float, rng: np.random.Generator) -> np.ndarray:
    """Exact read of a covariance, or a Hermitian-noise-corrupted one.

    The perturbation entries scale with the average diagonal of the true
    matrix; eigenvalues are floored at a small positive multiple of the
    trace so the estimate stays usable for whitening.
    """
    if not noise:
        return m
    dim = m.shape[0]
    scale = noise * float(np.trace(m).real) / dim
    e = herm(complex_gaussian(rng, m.shape)) * scale
    w, v = np.linalg.eigh(herm(m + e))
    floor = 1e-12 * max(float(np.trace(m).real), 1.0)
    w = np.maximum(w, floor)
    return (v * w) @ v.conj().T


def _capped_waterfill(omega, h_direct, omega_hat, rate_target, cap):
    """Water-fill onto the rate target, then lower the level to meet the cap."""
    dec = polite_waterfill(omega, h_direct, omega_hat, rate_target=rate_target)
    bound = False
    if dec.power > cap + CAP_SLACK:
        nu, d = waterfill_power(dec.channel.delta, cap)
        dec = dataclass_replace_pwf(dec, nu, d)
        bound = True
    return dec, bound


def dataclass_replace_pwf(dec, nu, d):
    from dataclasses import replace

    return replace(dec, nu=nu, d=d)


def run_prd(net: NetworkSpec, targets: Targets, rounds: int, *,
            p_max=None, beta: float = 1.0, estimation_noise: float = None,
            rng: np.random.Generator = None, rate_tol: float = 1e-6) -> SolveReport:
    """Run the distributed alternation for a given number of half rounds.

    ``rounds`` counts half rounds; odd steps (0.5, 1.5, ...) are forward
    transmitter updates and even steps reverse receiver updates.  ``p_max``
    is a scalar or per-link array of transmitter power caps; ``beta >= 1``
    inflates the per-link rate targets so the true targets are met in fewer
    rounds at some power premium.  Infeasibility never raises: it shows up
    as unmet rates in the trace.
    """
    if not net.is_white:
        raise ValueError("distributed simulation assumes a whitened network")
    if rounds < 1:
        raise ValueError("need at least one half round")
    if beta < 1.0:
        raise ValueError("target inflation must be at least one")
    n = net.n_links
    caps = np.broadcast_to(np.asarray(np.inf if p_max is None else p_max, dtype=float), (n,)).copy()
    noise = float(estimation_noise) if estimation_noise else 0.0
    if noise and rng is None:
        rng = np.random.default_rng(0)
    rev = reverse_network(net)
    inflated = targets.rates * beta

    accesses = []

    def local_channel(l: int) -> np.ndarray:
        # The only channel knowledge an agent of link l ever receives.
        accesses.append((l, l, l))
        return net.h[l][l]

    omega_est = [np.eye(net.rx_antennas(l), dtype=complex) for l in range(n)]
    omega_hat_est = [np.eye(net.tx_antennas(l), dtype=complex) for l in range(n)]
    sigma = [np.zeros((net.tx_antennas(l),) * 2, dtype=complex) for l in range(n)]
    sigma_hat = [np.zeros((net.rx_antennas(l),) * 2, dtype=complex) for l in range(n)]
    nu = np.zeros(n)

    iterates = []
    round_trace = []
    for half in range(1, rounds + 1):
        forward = half % 2 == 1
        step = half / 2.0
        if forward:
            cap_bound = np.zeros(n, dtype=bool)
            for l in range(n):
                h_ll = local_channel(l)
                dec, bound = _capped_waterfill(omega_est[l], h_ll, omega_hat_est[l],
                                               float(inflated[l]), float(caps[l]))
                sigma[l] = assemble_forward(dec.channel.g, omega_hat_est[l], dec.d)
                nu[l] = dec.nu
                cap_bound[l] = bound
            # Receivers estimate the new forward interference covariances.
            omega_est = [_estimate(interference_covariance(net, sigma, l), noise, rng)
                         for l in range(n)]
        else:
            cap_bound = np.zeros(n, dtype=bool)
            for l in range(n):
                h_ll = local_channel(l)
                dec, _ = _capped_waterfill(omega_hat_est[l], h_ll.conj().T, omega_est[l],
                                           float(inflated[l]), np.inf)
                sigma_hat[l] = assemble_forward(dec.channel.g, omega_est[l], dec.d)
            # Transmitters estimate the new reverse interference covariances.
            omega_hat_est = [_estimate(interference_covariance(rev, sigma_hat, l), noise, rng)
                             for l in range(n)]
        rates = all_link_rates(net, sigma)
        per_link = np.array([float(np.trace(m).real) for m in sigma])
        iterates.append(IterateRecord(step=step, sum_power=float(per_link.sum()), rates=rates))
        round_trace.append(PrdRound(step=step, direction="forward" if forward else "reverse",
                                    per_link_power=per_link, cap_bound=cap_bound,
                                    rates=rates, sum_power=float(per_link.sum())))

    from .network import CovarianceSet

    sigma_set = CovarianceSet.clamped(sigma)
    rates = all_link_rates(net, sigma_set)
    met = bool(np.all(rates >= targets.rates - rate_tol))
    status = STATUS_CONVERGED if met else STATUS_MAX_ITERS
    return SolveReport(status=status, iterates=tuple(iterates), sigma=sigma_set,
                       rates=rates, nu=nu.copy(), rounds=tuple(round_trace),
                       channel_accesses=tuple(accesses))
