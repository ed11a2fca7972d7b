"""Centralized solvers for rate-constrained covariance optimization.

Two problem flavors are covered for a fixed coupling matrix:

* max-min scaled-rate feasibility under a total power budget
  (``algorithm_a`` via per-stream SINR balancing, ``fop_via_pr1`` via a
  scale search on the power minimizer), and
* total power minimization under per-link rate targets (``algorithm_b``
  via SINR-target power control, ``algorithm_pr`` for interference-tree
  orderings, ``algorithm_pr1`` for general networks via iterated polite
  water-filling).

``check_optimality`` scores any covariance set against the stationarity
conditions (water-filling structure, proportional rates, tight budget),
and ``algorithm_o`` improves DPC/SIC orders by reading the per-link
water-filling levels.

Solvers accept colored/weighted networks and whiten internally; traces and
reports are always expressed in the caller's coordinates.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .duality import (
    DualScaling,
    InfeasibleTargetsError,
    covariance_transformation,
    dual_powers,
    forward_powers,
)
from .linalg import complex_gaussian, numerical_rank, phase_normalize
from .network import (
    CovarianceSet,
    EncodingOrder,
    NetworkSpec,
    all_link_rates,
    coupling_from_order,
    covariance_matrices,
    interference_covariance,
    is_itree,
    permute_network,
    pseudo_groups,
    reverse_network,
    sub_network,
    whiten,
    with_coupling,
)
from .streams import (
    crosstalk,
    flatten,
    forward_sinrs,
    mmse_sic_receivers,
    reverse_mmse_transmitters,
    reverse_sinrs,
    split_flat,
    stream_gains,
)
from .waterfill import assemble_forward, assemble_reverse, polite_waterfill, pwf_residual

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 500
DEFAULT_POWER_CAP = 1e6
RATE_TOL = 1e-6
BALANCE_POWER_TOL = 1e-9

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max-iters"
STATUS_INFEASIBLE = "infeasible-at-cap"
STATUS_ORDER_CYCLE = "order-cycle"


@dataclass(frozen=True)
class Targets:
    """Per-link rate targets, stored in nats."""

    rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        if np.any(self.rates < 0):
            raise ValueError("rate targets must be nonnegative")

    @classmethod
    def from_bits(cls, bits) -> "Targets":
        return cls(np.asarray(bits, dtype=float) * np.log(2.0))

    @property
    def bits(self) -> np.ndarray:
        return self.rates / np.log(2.0)

    def scaled(self, alpha: float) -> "Targets":
        return Targets(self.rates * alpha)


def stream_targets(net: NetworkSpec, targets: Targets):
    """Stream counts (rank of each direct channel) and per-link SINR targets."""
    m = np.zeros(net.n_links, dtype=int)
    gamma0 = np.zeros(net.n_links)
    for l in range(net.n_links):
        s = np.linalg.svd(net.h[l][l], compute_uv=False)
        m[l] = numerical_rank(s, max(net.h[l][l].shape))
        if m[l] == 0:
            if targets.rates[l] > 0:
                raise ValueError(f"link {l} has a zero channel but a positive rate target")
            gamma0[l] = 0.0
        else:
            gamma0[l] = float(np.expm1(targets.rates[l] / m[l]))
    return m, gamma0


@dataclass(frozen=True)
class IterateRecord:
    """One trace row; half-integer steps mark forward/reverse half-updates."""

    step: float
    sum_power: float
    rates: np.ndarray
    max_residual: float = float("nan")


@dataclass(frozen=True)
class SolveReport:
    """Solver outcome: trace, final covariances and solver-specific extras.

    ``strategy`` (when present) is the final (t, r, p) stream strategy of
    the SINR-based solvers, expressed in whitened coordinates.
    """

    status: str
    iterates: tuple
    sigma: CovarianceSet
    rates: np.ndarray
    nu: np.ndarray = None
    alpha: float = None
    c_max: float = None
    rounds: tuple = None
    channel_accesses: tuple = None
    strategy: tuple = None

    @property
    def sum_power(self) -> float:
        return self.sigma.sum_power()

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


def _trace_record(net, sigma, step, trace_residuals):
    rates = all_link_rates(net, sigma)
    power = float(sum(np.trace(m).real for m in covariance_matrices(sigma)))
    res = float(np.max(pwf_residual(net, sigma))) if trace_residuals else float("nan")
    return IterateRecord(step=step, sum_power=power, rates=rates, max_residual=res)


def _init_vectors(net: NetworkSpec, m_counts, rng=None) -> list:
    """Initial unit transmit vectors: right singular vectors of the direct
    channels, or random orthonormal columns when an rng is supplied."""
    t = []
    for l in range(net.n_links):
        n_t = net.tx_antennas(l)
        m = int(m_counts[l])
        if rng is None:
            _, _, vh = np.linalg.svd(net.h[l][l])
            cols = vh.conj().T[:, :m]
        else:
            a = complex_gaussian(rng, (n_t, max(m, 1)))
            cols, _ = np.linalg.qr(a)
            cols = cols[:, :m]
        cols = np.column_stack([phase_normalize(cols[:, j]) for j in range(m)]) \
            if m else np.zeros((n_t, 0), dtype=complex)
        t.append(cols)
    return t


def _strategy_sigmas(t, p) -> list:
    return [(t[l] * p[l]) @ t[l].conj().T for l in range(len(t))]


def _finalize_colored(whitener, report: SolveReport) -> SolveReport:
    if whitener is None:
        return report
    sigma = CovarianceSet.clamped(whitener.from_whitened(report.sigma))
    return dataclasses.replace(report, sigma=sigma)


def _maybe_whiten(net: NetworkSpec):
    if net.is_white:
        return net, None
    w = whiten(net)
    return w.network, w


def algorithm_a(net: NetworkSpec, targets: Targets, p_total: float, *,
                tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                rng=None, trace_residuals: bool = False) -> SolveReport:
    """Max-min scaled-SINR balancing under a total power budget.

    Alternates forward MMSE-SIC receivers, a forward power-balancing
    eigensystem whose dominant eigenvector equalizes all scaled stream
    SINRs at level ``c_max`` while spending exactly the budget, a dual
    power solve at the balanced SINRs, and reverse MMSE-SIC updates of the
    transmit vectors.  Stops when ``c_max`` stabilizes.
    """
    if p_total <= 0:
        raise ValueError("power budget must be positive")
    net, whitener = _maybe_whiten(net)
    m_counts, gamma0 = stream_targets(net, targets)
    gamma0_flat = np.repeat(gamma0, m_counts)
    if np.any(gamma0_flat <= 0):
        raise ValueError("balancing requires strictly positive rate targets")
    t = _init_vectors(net, m_counts, rng)
    total_streams = int(m_counts.sum())
    p = split_flat(np.full(total_streams, p_total / total_streams), m_counts)

    c_max = None
    status = STATUS_MAX_ITERS
    iterates = []
    r = None
    for it in range(max_iters):
        r = mmse_sic_receivers(net, t, p)
        gains = flatten(stream_gains(net, t, r))
        if np.any(gains <= 0):
            raise ArithmeticError("a stream lost its direct path during balancing")
        dvec = gamma0_flat / gains
        psi = crosstalk(net, t, r)
        n = total_streams
        lam = np.zeros((n + 1, n + 1))
        dpsi = dvec[:, None] * psi
        lam[:n, :n] = dpsi
        lam[:n, n] = dvec
        lam[n, :n] = dpsi.sum(axis=0) / p_total
        lam[n, n] = dvec.sum() / p_total
        eigvals, eigvecs = np.linalg.eig(lam)
        idx = int(np.argmax(np.abs(eigvals)))
        lam_max = eigvals[idx]
        if abs(lam_max.imag) > 1e-9 * abs(lam_max):
            raise ArithmeticError("balancing eigensystem has no dominant real eigenvalue")
        vec = eigvecs[:, idx]
        vec = vec / vec[n]
        if np.abs(vec.imag).max() > 1e-7 or np.any(vec.real <= 0):
            raise ArithmeticError("balancing eigenvector is not positive")
        p_flat = vec[:n].real
        if abs(p_flat.sum() - p_total) > BALANCE_POWER_TOL * p_total:
            raise ArithmeticError("balanced powers do not meet the budget")
        p = split_flat(p_flat, m_counts)
        new_c = 1.0 / float(lam_max.real)
        iterates.append(_trace_record(net, _strategy_sigmas(t, p), it + 0.5, trace_residuals))
        if c_max is not None and abs(new_c - c_max) <= tol * (1.0 + abs(new_c)):
            c_max = new_c
            status = STATUS_CONVERGED
            break
        c_max = new_c
        scaling = DualScaling(gamma0=c_max * gamma0_flat, gains=gains)
        q_flat = dual_powers(scaling, psi)
        q = split_flat(q_flat, m_counts)
        t = reverse_mmse_transmitters(net, r, q)
        iterates.append(_trace_record(net, _strategy_sigmas(t, p), it + 1.0, trace_residuals))

    sigma = CovarianceSet.clamped(_strategy_sigmas(t, p))
    rates = all_link_rates(net, sigma)
    alpha = float(np.min(rates / targets.rates))
    report = SolveReport(status=status, iterates=tuple(iterates), sigma=sigma,
                         rates=rates, alpha=alpha, c_max=c_max,
                         strategy=(tuple(t), tuple(r), tuple(p)))
    return _finalize_colored(whitener, report)


def algorithm_b(net: NetworkSpec, targets: Targets, *,
                tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                power_cap: float = DEFAULT_POWER_CAP, rng=None,
                trace_residuals: bool = False) -> SolveReport:
    """Power minimization by SINR-target power control with duality.

    Each iteration refreshes forward MMSE-SIC receivers, rescales stream
    powers toward the per-stream SINR targets, switches to the reverse
    links through the dual power solve, and repeats the update there.
    Converged when every stream SINR sits on its target.
    """
    net, whitener = _maybe_whiten(net)
    m_counts, gamma0 = stream_targets(net, targets)
    gamma0_flat = np.repeat(gamma0, m_counts)
    t = _init_vectors(net, m_counts, rng)
    p = split_flat(np.ones(int(m_counts.sum())), m_counts)

    status = STATUS_MAX_ITERS
    iterates = []
    r = None
    for it in range(max_iters):
        r = mmse_sic_receivers(net, t, p)
        gam = flatten(forward_sinrs(net, t, r, p))
        err = _relative_sinr_error(gam, gamma0_flat)
        if err <= tol:
            status = STATUS_CONVERGED
            break
        # Forward power control toward the targets, then carry the achieved
        # SINRs to the reverse links with the same total power.
        p_flat = flatten(p)
        p_flat = p_flat * _safe_ratio(gamma0_flat, gam)
        p = split_flat(p_flat, m_counts)
        iterates.append(_trace_record(net, _strategy_sigmas(t, p), it + 0.5, trace_residuals))
        try:
            gam_new = flatten(forward_sinrs(net, t, r, p))
            gains = flatten(stream_gains(net, t, r))
            psi = crosstalk(net, t, r)
            q_flat = dual_powers(DualScaling(gamma0=gam_new, gains=gains), psi)
            q = split_flat(q_flat, m_counts)
            t = reverse_mmse_transmitters(net, r, q)
            ghat = flatten(reverse_sinrs(net, t, r, q))
            q_flat = q_flat * _safe_ratio(gamma0_flat, ghat)
            q = split_flat(q_flat, m_counts)
            ghat_new = flatten(reverse_sinrs(net, t, r, q))
            gains = flatten(stream_gains(net, t, r))
            psi = crosstalk(net, t, r)
            p_flat = forward_powers(DualScaling(gamma0=ghat_new, gains=gains), psi)
        except InfeasibleTargetsError:
            # The iteration drove the powers into the interference-limited
            # regime where the dual systems degenerate.
            status = STATUS_INFEASIBLE
            break
        p = split_flat(p_flat, m_counts)
        iterates.append(_trace_record(net, _strategy_sigmas(t, p), it + 1.0, trace_residuals))
        if p_flat.sum() > power_cap:
            status = STATUS_INFEASIBLE
            break

    sigma = CovarianceSet.clamped(_strategy_sigmas(t, p))
    rates = all_link_rates(net, sigma)
    report = SolveReport(status=status, iterates=tuple(iterates), sigma=sigma, rates=rates,
                         strategy=(tuple(t), tuple(r), tuple(p)))
    return _finalize_colored(whitener, report)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.ones_like(num)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def _relative_sinr_error(gam: np.ndarray, gamma0: np.ndarray) -> float:
    active = gamma0 > 0
    if not active.any():
        return 0.0
    return float(np.max(np.abs(gam[active] - gamma0[active]) / gamma0[active]))


def algorithm_pr(net: NetworkSpec, targets: Targets, *,
                 tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                 power_cap: float = DEFAULT_POWER_CAP, sigma_init=None, rng=None,
                 trace_residuals: bool = False) -> SolveReport:
    """Power minimization for interference-tree orderings.

    Sweeps the links in tree order; for each prefix sub-network it maps the
    forward covariances to the reverse side, re-water-fills the newest
    reverse link exactly onto its rate target, and maps back.  Once all
    targets are met, every sweep can only lower the total power.
    """
    net, whitener = _maybe_whiten(net)
    order = is_itree(net.coupling)
    if order is None:
        raise ValueError("network is not an interference tree under any ordering")
    perm_net = permute_network(net, order)
    inv_order = np.argsort(order)
    rates_perm = targets.rates[list(order)]

    n = perm_net.n_links
    if sigma_init is not None:
        sigma = [np.asarray(m, dtype=complex).copy() for m in covariance_matrices(sigma_init)]
        sigma = [sigma[i] for i in order]
    else:
        sigma = _default_sigma_init(perm_net, rng, per_rx=False)
    nu = np.zeros(n)
    status = STATUS_MAX_ITERS
    iterates = []
    prev_power = None
    for sweep in range(max_iters):
        for i in range(1, n + 1):
            sub, _budget = sub_network(perm_net, sigma, i)
            wsub = whiten(sub)
            sw = wsub.to_whitened(sigma[:i])
            rev_sub = reverse_network(wsub.network)
            sigma_hat = list(covariance_transformation(wsub.network, sw))
            omega_i = interference_covariance(wsub.network, sw, i - 1)
            omega_hat_i = interference_covariance(rev_sub, sigma_hat, i - 1)
            dec = polite_waterfill(omega_i, wsub.network.h[i - 1][i - 1], omega_hat_i,
                                   rate_target=float(rates_perm[i - 1]))
            sigma_hat[i - 1] = assemble_reverse(dec.channel.f, omega_i, dec.d)
            nu[i - 1] = dec.nu
            s_new = covariance_transformation(rev_sub, sigma_hat)
            sigma[:i] = wsub.from_whitened(list(s_new))
        iterates.append(_trace_record(perm_net, sigma, float(sweep + 1), trace_residuals))
        power = iterates[-1].sum_power
        rates_now = iterates[-1].rates
        if power > power_cap:
            status = STATUS_INFEASIBLE
            break
        if prev_power is not None and abs(power - prev_power) <= tol * (1.0 + power) \
                and np.max(np.abs(rates_now - rates_perm)) <= RATE_TOL:
            status = STATUS_CONVERGED
            break
        prev_power = power

    sigma_out = [sigma[i] for i in inv_order]
    nu_out = nu[inv_order]
    sigma_set = CovarianceSet.clamped(sigma_out)
    report = SolveReport(status=status, iterates=tuple(iterates), sigma=sigma_set,
                         rates=all_link_rates(net, sigma_set), nu=nu_out)
    return _finalize_colored(whitener, report)


def _default_sigma_init(net: NetworkSpec, rng, per_rx: bool, total: float = 1.0) -> list:
    """Spread a unit of power uniformly over links and antennas."""
    out = []
    for l in range(net.n_links):
        dim = net.rx_antennas(l) if per_rx else net.tx_antennas(l)
        scale = total / (net.n_links * dim)
        m = scale * np.eye(dim, dtype=complex)
        if rng is not None:
            from .linalg import random_psd

            m = random_psd(rng, dim)
            m *= total / (net.n_links * max(np.trace(m).real, 1e-12))
        out.append(m)
    return out


def algorithm_pr1(net: NetworkSpec, targets: Targets, *,
                  tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                  power_cap: float = DEFAULT_POWER_CAP, sigma_hat_init=None, rng=None,
                  trace_residuals: bool = False) -> SolveReport:
    """Power minimization for general networks by iterated polite water-filling.

    Forward half-step: water-fill every link's doubly whitened channel onto
    its rate target and rebuild the forward covariances; reverse half-step:
    refresh the forward interference covariances and do the same on the
    reverse side.  Convergence of the alternation is not guaranteed in
    general and is reported honestly through the status field.
    """
    net, whitener = _maybe_whiten(net)
    rev = reverse_network(net)
    n = net.n_links
    if sigma_hat_init is not None:
        sigma_hat = [np.asarray(m, dtype=complex).copy() for m in covariance_matrices(sigma_hat_init)]
    else:
        sigma_hat = _default_sigma_init(net, rng, per_rx=True)
    omega = [np.eye(net.rx_antennas(l), dtype=complex) for l in range(n)]
    nu = np.zeros(n)
    status = STATUS_MAX_ITERS
    iterates = []
    prev_power = None
    sigma = [np.zeros((net.tx_antennas(l),) * 2, dtype=complex) for l in range(n)]
    for it in range(max_iters):
        omega_hat = [interference_covariance(rev, sigma_hat, l) for l in range(n)]
        for l in range(n):
            dec = polite_waterfill(omega[l], net.h[l][l], omega_hat[l],
                                   rate_target=float(targets.rates[l]))
            sigma[l] = assemble_forward(dec.channel.g, omega_hat[l], dec.d)
            nu[l] = dec.nu
        iterates.append(_trace_record(net, sigma, it + 0.5, trace_residuals))
        omega = [interference_covariance(net, sigma, l) for l in range(n)]
        for l in range(n):
            dec = polite_waterfill(omega[l], net.h[l][l], omega_hat[l],
                                   rate_target=float(targets.rates[l]))
            sigma_hat[l] = assemble_reverse(dec.channel.f, omega[l], dec.d)
        iterates.append(_trace_record(net, sigma, it + 1.0, trace_residuals))
        power = iterates[-1].sum_power
        if power > power_cap:
            status = STATUS_INFEASIBLE
            break
        rates_now = iterates[-1].rates
        if prev_power is not None and abs(power - prev_power) <= tol * (1.0 + power) \
                and np.max(np.abs(rates_now - targets.rates)) <= RATE_TOL:
            status = STATUS_CONVERGED
            break
        prev_power = power

    sigma_set = CovarianceSet.clamped(sigma)
    report = SolveReport(status=status, iterates=tuple(iterates), sigma=sigma_set,
                         rates=all_link_rates(net, sigma_set), nu=nu.copy())
    return _finalize_colored(whitener, report)


def fop_via_pr1(net: NetworkSpec, targets: Targets, p_total: float, *,
                power_rtol: float = 1e-3, max_bisections: int = 60,
                **pr1_kwargs) -> SolveReport:
    """Max-min scaled rates by scale search over the power minimizer.

    Scales all targets by a common factor, solves the power minimization at
    each scale, and bisects for the largest factor whose minimum power fits
    the budget; the returned solve spends the budget to within the given
    relative tolerance.
    """
    if p_total <= 0:
        raise ValueError("power budget must be positive")

    def solve_at(alpha: float):
        rep = algorithm_pr1(net, targets.scaled(alpha), **pr1_kwargs)
        usable = rep.status == STATUS_CONVERGED and rep.sum_power <= p_total
        return rep, usable

    lo, hi = 0.0, 1.0
    rep_lo = None
    rep_hi, usable_hi = solve_at(hi)
    doublings = 0
    while usable_hi and doublings < 40:
        lo, rep_lo = hi, rep_hi
        hi *= 2.0
        rep_hi, usable_hi = solve_at(hi)
        doublings += 1

    for _ in range(max_bisections):
        if rep_lo is not None and abs(rep_lo.sum_power - p_total) <= power_rtol * p_total:
            break
        mid = 0.5 * (lo + hi)
        rep_mid, usable_mid = solve_at(mid)
        if usable_mid:
            lo, rep_lo = mid, rep_mid
        else:
            hi = mid
    if rep_lo is None:
        # Even vanishing targets exceeded the budget; report the smallest probe.
        return dataclasses.replace(rep_hi, alpha=0.0)
    return dataclasses.replace(rep_lo, alpha=lo)


@dataclass(frozen=True)
class OptimalityReport:
    """Distance of a solution from the stationarity conditions."""

    residuals: np.ndarray
    alpha: float
    rates: np.ndarray
    rate_errors: np.ndarray
    power_gap: float = None

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max(initial=0.0))

    @property
    def max_rate_error(self) -> float:
        return float(self.rate_errors.max(initial=0.0))


def check_optimality(net: NetworkSpec, sigma, targets: Targets, mode: str = "spmp",
                     p_total: float = None) -> OptimalityReport:
    """Score a covariance set against the stationarity conditions.

    Reports the per-link polite water-filling residuals, the deviation of
    the rates from a common multiple of the targets (the multiple is one
    for power minimization and fitted by least squares otherwise), and for
    the budgeted problem the gap between spent and budgeted power.
    """
    if mode not in ("spmp", "fop"):
        raise ValueError("mode must be 'spmp' or 'fop'")
    white, whitener = _maybe_whiten(net)
    mats = covariance_matrices(sigma)
    white_mats = whitener.to_whitened(mats) if whitener else mats
    rates = all_link_rates(net, mats)
    if mode == "spmp":
        alpha = 1.0
    else:
        denom = float(targets.rates @ targets.rates)
        alpha = float(rates @ targets.rates) / denom if denom > 0 else 1.0
    residuals = pwf_residual(white, white_mats)
    rate_errors = np.abs(rates - alpha * targets.rates)
    power_gap = None
    if mode == "fop" and p_total is not None:
        spent = float(sum(np.trace(m @ net.weight_matrix(l)).real for l, m in enumerate(mats)))
        power_gap = abs(spent - p_total)
    return OptimalityReport(residuals=residuals, alpha=alpha, rates=rates,
                            rate_errors=rate_errors, power_gap=power_gap)


def _reorder_groups(order: EncodingOrder, groups, nu: np.ndarray) -> EncodingOrder:
    encode = {k: list(v) for k, v in order.encode.items()}
    decode = {k: list(v) for k, v in order.decode.items()}

    def reassign(perm: list, members: tuple, descending: bool) -> None:
        slots = sorted(perm.index(l) for l in members)
        ranked = sorted(members, key=lambda l: -nu[l] if descending else nu[l])
        for slot, link in zip(slots, ranked):
            perm[slot] = link

    for node_perm in encode.values():
        for members in groups.bc:
            if set(members) <= set(node_perm):
                reassign(node_perm, members, descending=True)
    for node_perm in decode.values():
        for members in groups.mac:
            if set(members) <= set(node_perm):
                reassign(node_perm, members, descending=False)
    return EncodingOrder(encode={k: tuple(v) for k, v in encode.items()},
                         decode={k: tuple(v) for k, v in decode.items()})


def algorithm_o(net: NetworkSpec, targets: Targets, inner_solver,
                initial_order: EncodingOrder = None, *, objective: str = "power",
                max_rounds: int = 20):
    """Improve DPC encoding and SIC decoding orders from water-filling levels.

    Solves at the current order, then re-sorts every pseudo BC by
    descending level (largest encoded first) and every pseudo MAC by
    ascending level (smallest decoded first).  Stops at a fixed order; on a
    revisited order it returns the best order seen with a cycle status.
    Links outside any pseudo group keep their initial positions.
    """
    if objective not in ("power", "alpha"):
        raise ValueError("objective must be 'power' or 'alpha'")
    order = initial_order if initial_order is not None else EncodingOrder.identity(net)
    seen = set()
    best = None
    best_obj = np.inf
    for _ in range(max_rounds):
        current = with_coupling(net, coupling_from_order(net, order))
        report = inner_solver(current, targets)
        if report.nu is None:
            raise ValueError("order improvement needs water-filling levels from the inner solver")
        obj = report.sum_power if objective == "power" else -float(report.alpha)
        if obj < best_obj:
            best_obj = obj
            best = (order, report)
        seen.add(order.key())
        groups = pseudo_groups(current)
        new_order = _reorder_groups(order, groups, report.nu)
        if new_order.key() == order.key():
            return order, report
        if new_order.key() in seen:
            best_order, best_report = best
            return best_order, dataclasses.replace(best_report, status=STATUS_ORDER_CYCLE)
        order = new_order
    best_order, best_report = best
    return best_order, dataclasses.replace(best_report, status=STATUS_ORDER_CYCLE)
