"""B-MAC interference network model.

A network is a set of L data links. Link l runs from a (virtual) transmitter
with ``tx_antennas[l]`` antennas to a (virtual) receiver with
``rx_antennas[l]`` antennas; several links may live on the same physical
node, recorded through ``tx_group`` / ``rx_group``.  ``h[l][k]`` is the
channel from the transmitter of link k into the receiver of link l.

The binary coupling matrix ``coupling`` encodes the residual interference
after whatever cancellation scheme (DPC at transmitters, SIC at receivers)
is in use: ``coupling[l, k] == 1`` means link k still interferes link l.
Partially cancelled interference under combined DPC+SIC cannot be expressed
by a 0/1 matrix; such schemes are represented here by a bounding binary
matrix chosen by the caller.

Rates are computed and stored in nats throughout; conversion to bits happens
only at reporting time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .linalg import herm, is_identity, sqrt_psd, inv_sqrt_pd

HERMITIAN_TOL = 1e-10
EIGENVALUE_TOL = 1e-10


@dataclass(frozen=True)
class NetworkSpec:
    """Static description of a B-MAC network instance.

    Parameters
    ----------
    h : nested sequence of complex matrices
        ``h[l][k]`` has shape ``(rx_antennas[l], tx_antennas[k])``. A zero
        matrix means no physical path.
    coupling : (L, L) array
        Binary coupling matrix with zero diagonal.
    tx_group, rx_group : sequences of hashables
        Physical node identifiers per link. Links sharing an identifier are
        co-located and see identical channels to/from any other node.
    noise_cov, weight : optional sequences of Hermitian PD matrices
        Per-link noise covariance (at the receiver) and power-constraint
        weight (at the transmitter). ``None`` entries mean identity.
    """

    h: tuple
    coupling: np.ndarray
    tx_group: tuple
    rx_group: tuple
    noise_cov: tuple = ()
    weight: tuple = ()

    def __post_init__(self):
        length = len(self.h)
        object.__setattr__(self, "h", tuple(tuple(np.asarray(m, dtype=complex) for m in row) for row in self.h))
        object.__setattr__(self, "coupling", np.asarray(self.coupling, dtype=float))
        object.__setattr__(self, "tx_group", tuple(self.tx_group))
        object.__setattr__(self, "rx_group", tuple(self.rx_group))
        if not self.noise_cov:
            object.__setattr__(self, "noise_cov", (None,) * length)
        if not self.weight:
            object.__setattr__(self, "weight", (None,) * length)
        object.__setattr__(self, "noise_cov", tuple(None if m is None else np.asarray(m, dtype=complex) for m in self.noise_cov))
        object.__setattr__(self, "weight", tuple(None if m is None else np.asarray(m, dtype=complex) for m in self.weight))
        if self.coupling.shape != (length, length):
            raise ValueError("coupling matrix shape does not match link count")
        if len(self.tx_group) != length or len(self.rx_group) != length:
            raise ValueError("node grouping length does not match link count")
        for l in range(length):
            for k in range(length):
                if self.h[l][k].shape != (self.rx_antennas(l), self.tx_antennas(k)):
                    raise ValueError(f"channel ({l},{k}) has shape {self.h[l][k].shape}, "
                                     f"expected {(self.rx_antennas(l), self.tx_antennas(k))}")
        for l in range(length):
            if self.noise_cov[l] is not None and self.noise_cov[l].shape != (self.rx_antennas(l),) * 2:
                raise ValueError(f"noise covariance {l} has wrong shape")
            if self.weight[l] is not None and self.weight[l].shape != (self.tx_antennas(l),) * 2:
                raise ValueError(f"weight matrix {l} has wrong shape")

    @property
    def n_links(self) -> int:
        return len(self.h)

    def tx_antennas(self, l: int) -> int:
        return self.h[l][l].shape[1]

    def rx_antennas(self, l: int) -> int:
        return self.h[l][l].shape[0]

    def noise(self, l: int) -> np.ndarray:
        m = self.noise_cov[l]
        return np.eye(self.rx_antennas(l), dtype=complex) if m is None else m

    def weight_matrix(self, l: int) -> np.ndarray:
        m = self.weight[l]
        return np.eye(self.tx_antennas(l), dtype=complex) if m is None else m

    @property
    def is_white(self) -> bool:
        """True when every noise covariance and weight matrix is identity."""
        return all(m is None or is_identity(m) for m in self.noise_cov) and \
            all(m is None or is_identity(m) for m in self.weight)


@dataclass(frozen=True)
class CovarianceSet:
    """Per-link transmit covariance matrices (forward or reverse)."""

    matrices: tuple

    def __post_init__(self):
        object.__setattr__(self, "matrices", tuple(np.asarray(m, dtype=complex) for m in self.matrices))

    @classmethod
    def clamped(cls, matrices: Sequence[np.ndarray]) -> "CovarianceSet":
        """Symmetrize and clip tiny negative eigenvalues to zero."""
        out = []
        for m in matrices:
            w, v = np.linalg.eigh(herm(np.asarray(m, dtype=complex)))
            out.append(herm((v * np.maximum(w, 0.0)) @ v.conj().T))
        return cls(tuple(out))

    def violations(self) -> list:
        """Invariant diagnostics: Hermitian within 1e-10, eigenvalues >= -1e-10."""
        found = []
        for i, m in enumerate(self.matrices):
            scale = max(1.0, float(np.abs(m).max(initial=0.0)))
            if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
                found.append(f"matrix {i} not Hermitian")
            w = np.linalg.eigvalsh(herm(m))
            if w.size and w.min() < -EIGENVALUE_TOL * scale:
                found.append(f"matrix {i} has eigenvalue {w.min():.3e} below tolerance")
        return found

    def __iter__(self):
        return iter(self.matrices)

    def __len__(self):
        return len(self.matrices)

    def __getitem__(self, i):
        return self.matrices[i]

    def sum_power(self) -> float:
        return float(sum(np.trace(m).real for m in self.matrices))


def covariance_matrices(sigma) -> list:
    """Accept a CovarianceSet or any sequence of matrices."""
    if isinstance(sigma, CovarianceSet):
        return list(sigma.matrices)
    return [np.asarray(m, dtype=complex) for m in sigma]


def validate_coupling(net: NetworkSpec) -> list:
    """Diagnostic check of the coupling matrix; empty list when valid."""
    phi = net.coupling
    issues = []
    if phi.shape != (net.n_links, net.n_links):
        issues.append("coupling matrix has wrong shape")
        return issues
    for l in range(net.n_links):
        if phi[l, l] != 0:
            issues.append(f"diagonal nonzero at {l}")
    off = ~np.isin(phi, (0.0, 1.0))
    if off.any():
        issues.append("non-binary entries at " + str(sorted(zip(*np.nonzero(off)))))
    return issues


def interference_covariance(net: NetworkSpec, sigma, l: int) -> np.ndarray:
    """Interference-plus-noise covariance at the receiver of link l."""
    mats = covariance_matrices(sigma)
    omega = net.noise(l).astype(complex).copy()
    for k in range(net.n_links):
        if net.coupling[l, k]:
            hk = net.h[l][k]
            omega += net.coupling[l, k] * hk @ mats[k] @ hk.conj().T
    return herm(omega)


def link_rate(net: NetworkSpec, sigma, l: int) -> float:
    """Achievable mutual information of link l in nats."""
    mats = covariance_matrices(sigma)
    omega = interference_covariance(net, sigma, l)
    hll = net.h[l][l]
    m = np.eye(net.rx_antennas(l)) + hll @ mats[l] @ hll.conj().T @ np.linalg.inv(omega)
    sign, logdet = np.linalg.slogdet(m)
    return float(logdet)


def all_link_rates(net: NetworkSpec, sigma) -> np.ndarray:
    return np.array([link_rate(net, sigma, l) for l in range(net.n_links)])


def reverse_network(net: NetworkSpec) -> NetworkSpec:
    """Dual network: conjugate-transposed channels, transposed coupling.

    Transmit and receive sides swap, and so do the roles of the noise
    covariances and constraint weights.
    """
    length = net.n_links
    h_rev = tuple(tuple(net.h[k][l].conj().T for k in range(length)) for l in range(length))
    return NetworkSpec(
        h=h_rev,
        coupling=net.coupling.T.copy(),
        tx_group=net.rx_group,
        rx_group=net.tx_group,
        noise_cov=net.weight,
        weight=net.noise_cov,
    )


def is_itree(coupling: np.ndarray):
    """Link ordering under which no link is interfered by earlier links.

    Returns a tuple ``order`` of original link indices such that
    ``coupling[order[i], order[j]] == 0`` whenever ``j < i`` (the
    interference digraph is acyclic), or None when no such order exists.
    """
    phi = np.asarray(coupling)
    n = phi.shape[0]
    # Kahn's algorithm on the digraph with an edge l -> k whenever
    # coupling[l, k] != 0: interfered links must precede their interferers.
    indegree = [int(np.count_nonzero(phi[:, k])) for k in range(n)]
    ready = sorted(k for k in range(n) if indegree[k] == 0)
    order = []
    placed = [False] * n
    while ready:
        x = ready.pop(0)
        placed[x] = True
        order.append(x)
        for k in range(n):
            if phi[x, k] and not placed[k]:
                indegree[k] -= 1
                if indegree[k] == 0:
                    ready.append(k)
        ready.sort()
    if len(order) != n:
        return None
    return tuple(order)


def permute_network(net: NetworkSpec, order: Sequence[int]) -> NetworkSpec:
    """Reindex links so that new link i is old link ``order[i]``."""
    idx = list(order)
    h = tuple(tuple(net.h[l][k] for k in idx) for l in idx)
    return NetworkSpec(
        h=h,
        coupling=net.coupling[np.ix_(idx, idx)],
        tx_group=tuple(net.tx_group[i] for i in idx),
        rx_group=tuple(net.rx_group[i] for i in idx),
        noise_cov=tuple(net.noise_cov[i] for i in idx),
        weight=tuple(net.weight[i] for i in idx),
    )


def sub_network(net: NetworkSpec, sigma, i: int):
    """First ``i`` links with the rest frozen into colored noise.

    Returns ``(sub, budget)`` where ``sub`` keeps links ``0..i-1``, the
    noise covariance of each kept link absorbs the interference of the
    frozen links ``i..L-1``, and ``budget`` is the total transmit power
    currently spent by the kept links.
    """
    mats = covariance_matrices(sigma)
    length = net.n_links
    if not 1 <= i <= length:
        raise ValueError("sub-network size out of range")
    noise = []
    for l in range(i):
        w = net.noise(l).astype(complex).copy()
        for j in range(i, length):
            if net.coupling[l, j]:
                hj = net.h[l][j]
                w += net.coupling[l, j] * hj @ mats[j] @ hj.conj().T
        noise.append(herm(w))
    sub = NetworkSpec(
        h=tuple(tuple(net.h[l][k] for k in range(i)) for l in range(i)),
        coupling=net.coupling[:i, :i].copy(),
        tx_group=net.tx_group[:i],
        rx_group=net.rx_group[:i],
        noise_cov=tuple(noise),
        weight=net.weight[:i],
    )
    budget = float(sum(np.trace(mats[l]).real for l in range(i)))
    return sub, budget


@dataclass(frozen=True)
class WhitenedNetwork:
    """A network with identity noise/weights plus invertible covariance maps."""

    network: NetworkSpec
    _weight_sqrt: tuple
    _weight_inv_sqrt: tuple

    def to_whitened(self, sigma) -> list:
        mats = covariance_matrices(sigma)
        return [herm(s @ m @ s) for s, m in zip(self._weight_sqrt, mats)]

    def from_whitened(self, sigma) -> list:
        mats = covariance_matrices(sigma)
        return [herm(s @ m @ s) for s, m in zip(self._weight_inv_sqrt, mats)]


def whiten(net: NetworkSpec) -> WhitenedNetwork:
    """Change variables so noise covariances and weights become identity.

    Channels become ``noise^{-1/2} @ h @ weight^{-1/2}`` and covariances map
    through ``weight^{1/2} @ sigma @ weight^{1/2}``; link rates and the
    weighted power constraint value are invariant under the pair of maps.
    """
    length = net.n_links
    n_inv_sqrt = [inv_sqrt_pd(net.noise(l)) for l in range(length)]
    w_sqrt = [sqrt_psd(net.weight_matrix(l)) for l in range(length)]
    w_inv_sqrt = [inv_sqrt_pd(net.weight_matrix(l)) for l in range(length)]
    for l in range(length):
        wmin = np.linalg.eigvalsh(herm(net.noise(l))).min()
        vmin = np.linalg.eigvalsh(herm(net.weight_matrix(l))).min()
        if wmin <= 0 or vmin <= 0:
            raise ValueError(f"noise or weight matrix of link {l} is not positive definite")
    h = tuple(
        tuple(n_inv_sqrt[l] @ net.h[l][k] @ w_inv_sqrt[k] for k in range(length))
        for l in range(length)
    )
    white = NetworkSpec(
        h=h,
        coupling=net.coupling.copy(),
        tx_group=net.tx_group,
        rx_group=net.rx_group,
    )
    return WhitenedNetwork(network=white, _weight_sqrt=tuple(w_sqrt), _weight_inv_sqrt=tuple(w_inv_sqrt))


@dataclass(frozen=True)
class PseudoGroups:
    """Maximal pseudo-BC and pseudo-MAC link sets (size >= 2)."""

    bc: tuple
    mac: tuple


def _uniform_outside_coupling(phi: np.ndarray, members: tuple, n: int, incoming: bool) -> bool:
    outside = [k for k in range(n) if k not in members]
    for k in outside:
        vals = {phi[j, k] if incoming else phi[k, j] for j in members}
        if len(vals) > 1:
            return False
    return True


def _maximal_uniform_subsets(phi: np.ndarray, links: list, n: int, incoming: bool) -> list:
    qualifying = []
    for size in range(len(links), 1, -1):
        for members in combinations(links, size):
            if any(set(members) <= set(q) for q in qualifying):
                continue
            if _uniform_outside_coupling(phi, members, n, incoming):
                qualifying.append(tuple(sorted(members)))
    return qualifying


def pseudo_groups(net: NetworkSpec) -> PseudoGroups:
    """Pseudo BCs and pseudo MACs under the all-or-none coupling condition.

    A set of links on one physical transmitter is a pseudo BC when every
    outside link is either interfered by all members or by none; dually, a
    set on one physical receiver is a pseudo MAC when every outside link
    either interferes all members or none.  Only maximal sets with at least
    two links are reported, since singletons carry no order freedom.
    """
    phi = net.coupling
    n = net.n_links
    by_tx = {}
    by_rx = {}
    for l in range(n):
        by_tx.setdefault(net.tx_group[l], []).append(l)
        by_rx.setdefault(net.rx_group[l], []).append(l)
    bc = []
    for links in by_tx.values():
        if len(links) >= 2:
            bc.extend(_maximal_uniform_subsets(phi, links, n, incoming=False))
    mac = []
    for links in by_rx.values():
        if len(links) >= 2:
            mac.extend(_maximal_uniform_subsets(phi, links, n, incoming=True))
    return PseudoGroups(bc=tuple(sorted(bc)), mac=tuple(sorted(mac)))


@dataclass(frozen=True)
class EncodingOrder:
    """Per-node encoding (DPC) and decoding (SIC) permutations.

    ``encode[node]`` lists that transmitter's links in encoding order;
    ``decode[node]`` lists that receiver's links in decoding order.
    """

    encode: dict
    decode: dict

    def validate(self, net: NetworkSpec) -> None:
        by_tx = {}
        by_rx = {}
        for l in range(net.n_links):
            by_tx.setdefault(net.tx_group[l], set()).add(l)
            by_rx.setdefault(net.rx_group[l], set()).add(l)
        for node, links in by_tx.items():
            if set(self.encode.get(node, ())) != links:
                raise ValueError(f"encode order for node {node!r} is not a permutation of its links")
        for node, links in by_rx.items():
            if set(self.decode.get(node, ())) != links:
                raise ValueError(f"decode order for node {node!r} is not a permutation of its links")

    @classmethod
    def identity(cls, net: NetworkSpec) -> "EncodingOrder":
        encode = {}
        decode = {}
        for l in range(net.n_links):
            encode.setdefault(net.tx_group[l], []).append(l)
            decode.setdefault(net.rx_group[l], []).append(l)
        return cls(
            encode={k: tuple(v) for k, v in encode.items()},
            decode={k: tuple(v) for k, v in decode.items()},
        )

    def key(self) -> tuple:
        return (
            tuple(sorted((k, v) for k, v in self.encode.items())),
            tuple(sorted((k, v) for k, v in self.decode.items())),
        )


def physical_reach(net: NetworkSpec) -> np.ndarray:
    """Boolean matrix: does the transmitter of link k physically reach link l."""
    n = net.n_links
    reach = np.zeros((n, n), dtype=bool)
    for l in range(n):
        for k in range(n):
            reach[l, k] = bool(np.abs(net.h[l][k]).max(initial=0.0) > 0.0)
    return reach


def coupling_from_order(net: NetworkSpec, order: EncodingOrder) -> np.ndarray:
    """Rebuild the coupling matrix implied by DPC/SIC orders.

    Interference from link k into link l is cancelled when the links share
    a transmitter and l is encoded after k, or share a receiver and k is
    decoded before l; interference over a zero channel never exists.
    """
    order.validate(net)
    n = net.n_links
    reach = physical_reach(net)
    enc_pos = {}
    for node, links in order.encode.items():
        for pos, l in enumerate(links):
            enc_pos[l] = pos
    dec_pos = {}
    for node, links in order.decode.items():
        for pos, l in enumerate(links):
            dec_pos[l] = pos
    phi = np.zeros((n, n))
    for l in range(n):
        for k in range(n):
            if l == k or not reach[l, k]:
                continue
            if net.tx_group[l] == net.tx_group[k] and enc_pos[l] > enc_pos[k]:
                continue
            if net.rx_group[l] == net.rx_group[k] and dec_pos[k] < dec_pos[l]:
                continue
            phi[l, k] = 1.0
    return phi


def with_coupling(net: NetworkSpec, coupling: np.ndarray) -> NetworkSpec:
    return replace(net, coupling=np.asarray(coupling, dtype=float))
