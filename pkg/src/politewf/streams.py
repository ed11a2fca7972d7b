"""Stream-level view of a MIMO link: decomposition into SISO streams,
MMSE-SIC receivers, cross-talk matrices and per-stream SINRs.

All SINR formulas here assume a whitened network (identity noise
covariances); colored or weighted networks must be whitened first.

Stream bookkeeping is link-major: the flat index of stream (l, m) is
``sum(M[:l]) + m``.  Within a link, stream m is the m-th to be decoded in
the forward direction; the reverse direction decodes in the opposite order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import eigh_desc, numerical_rank, phase_normalize, unit
from .network import NetworkSpec, covariance_matrices, interference_covariance

UNIT_NORM_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class StreamStrategy:
    """Transmit vectors, receive vectors and stream powers for all links.

    ``t[l]`` and ``r[l]`` hold unit-norm columns (one per stream); ``p[l]``
    the forward stream powers and optionally ``q[l]`` the reverse powers.
    """

    t: tuple
    r: tuple
    p: tuple
    q: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(np.asarray(m, dtype=complex) for m in self.t))
        object.__setattr__(self, "r", tuple(np.asarray(m, dtype=complex) for m in self.r))
        object.__setattr__(self, "p", tuple(np.asarray(v, dtype=float) for v in self.p))
        if self.q is not None:
            object.__setattr__(self, "q", tuple(np.asarray(v, dtype=float) for v in self.q))

    @property
    def counts(self) -> tuple:
        return tuple(m.shape[1] for m in self.t)

    def sigma(self, l: int) -> np.ndarray:
        """Forward covariance of link l rebuilt from the decomposition."""
        return (self.t[l] * self.p[l]) @ self.t[l].conj().T

    def sigmas(self) -> list:
        return [self.sigma(l) for l in range(len(self.t))]


def flatten(parts) -> np.ndarray:
    parts = [np.asarray(v, dtype=float).ravel() for v in parts]
    return np.concatenate(parts) if parts else np.zeros(0)


def split_flat(flat: np.ndarray, counts) -> list:
    out = []
    pos = 0
    for c in counts:
        out.append(np.asarray(flat[pos:pos + c], dtype=float))
        pos += c
    return out


def _require_white(net: NetworkSpec) -> None:
    if not net.is_white:
        raise ValueError("stream SINR formulas assume identity noise; whiten the network first")


def decompose_eigen(sigma: np.ndarray):
    """Minimal eigen-decomposition of a PSD covariance into streams.

    Returns ``(t, p)`` where ``t`` has one unit-norm column per stream
    (eigenvectors, eigenvalues descending, deterministic phase) and
    ``p`` the stream powers; ``t @ diag(p) @ t^H`` rebuilds the input.
    """
    sigma = np.asarray(sigma, dtype=complex)
    w, v = eigh_desc(sigma)
    w = np.maximum(w, 0.0)
    rank = numerical_rank(w, sigma.shape[0])
    t = np.column_stack([phase_normalize(v[:, j]) for j in range(rank)]) \
        if rank else np.zeros((sigma.shape[0], 0), dtype=complex)
    return t, w[:rank]


def mmse_sic_receivers(net: NetworkSpec, t, p) -> list:
    """MMSE-SIC receive vectors for each stream of each link.

    Stream m of link l is the m-th to be decoded: its receiver suppresses
    the not-yet-cancelled own streams m+1.. plus all cross-link
    interference.
    """
    _require_white(net)
    sigmas = [(t[l] * p[l]) @ t[l].conj().T for l in range(net.n_links)]
    receivers = []
    for l in range(net.n_links):
        omega = interference_covariance(net, sigmas, l)
        hll = net.h[l][l]
        m_l = t[l].shape[1]
        cols = []
        # Build the residual-interference matrix backwards so each stream
        # reuses the accumulated later-stream terms.
        x = omega.copy()
        partial = [None] * m_l
        for m in range(m_l - 1, -1, -1):
            partial[m] = x.copy()
            hm = hll @ t[l][:, m]
            x = x + p[l][m] * np.outer(hm, hm.conj())
        for m in range(m_l):
            hm = hll @ t[l][:, m]
            r = np.linalg.solve(partial[m], hm)
            cols.append(unit(r))
        receivers.append(np.column_stack(cols) if cols else np.zeros((net.rx_antennas(l), 0), dtype=complex))
    return receivers


def reverse_mmse_transmitters(net: NetworkSpec, r, q) -> list:
    """MMSE-SIC receive vectors of the reverse links, used as new transmit
    vectors for the forward links.

    The reverse direction decodes each link's streams in the opposite
    intra-link order, so this is the forward receiver computation on the
    reverse network with the stream order flipped.
    """
    from .network import reverse_network

    rev = reverse_network(net)
    r_flip = [m[:, ::-1] for m in r]
    q_flip = [np.asarray(v)[::-1] for v in q]
    t_flip = mmse_sic_receivers(rev, r_flip, q_flip)
    return [m[:, ::-1] for m in t_flip]


def stream_gains(net: NetworkSpec, t, r) -> list:
    """Direct-path power gains |r^H H t|^2 per stream."""
    gains = []
    for l in range(net.n_links):
        hll = net.h[l][l]
        g = np.abs(np.sum(r[l].conj() * (hll @ t[l]), axis=0)) ** 2
        gains.append(g)
    return gains


def crosstalk(net: NetworkSpec, t, r) -> np.ndarray:
    """Cross-talk matrix over flat stream indices (link-major).

    Entry (row=(l,m), col=(k,n)) is the power gain from transmit stream
    (k,n) into receive stream (l,m): zero within a link for m >= n
    (already cancelled by SIC), the direct-channel gain for m < n, and
    the coupling-gated cross-channel gain otherwise.
    """
    counts = [t[l].shape[1] for l in range(net.n_links)]
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(int)
    total = int(offsets[-1])
    psi = np.zeros((total, total))
    for l in range(net.n_links):
        for k in range(net.n_links):
            if counts[l] == 0 or counts[k] == 0:
                continue
            block = np.abs(r[l].conj().T @ net.h[l][k] @ t[k]) ** 2
            if k == l:
                block = np.triu(block, 1)
            else:
                block = net.coupling[l, k] * block
            psi[offsets[l]:offsets[l + 1], offsets[k]:offsets[k + 1]] = block
    return psi


def forward_sinrs(net: NetworkSpec, t, r, p) -> list:
    """Per-stream forward SINRs under strategy (t, r, p)."""
    _require_white(net)
    counts = [t[l].shape[1] for l in range(net.n_links)]
    psi = crosstalk(net, t, r)
    gains = flatten(stream_gains(net, t, r))
    p_flat = flatten(p)
    den = 1.0 + psi @ p_flat
    return split_flat(p_flat * gains / den, counts)


def reverse_sinrs(net: NetworkSpec, t, r, q) -> list:
    """Per-stream reverse SINRs with r as transmit and t as receive vectors.

    The reverse intra-link decode order is opposite to the forward one,
    which is what the transposed cross-talk indexing expresses.
    """
    _require_white(net)
    counts = [t[l].shape[1] for l in range(net.n_links)]
    psi = crosstalk(net, t, r)
    gains = flatten(stream_gains(net, t, r))
    q_flat = flatten(q)
    den = 1.0 + psi.T @ q_flat
    return split_flat(q_flat * gains / den, counts)


def sum_stream_rates(sinrs) -> np.ndarray:
    """Per-link sum of stream rates, in nats."""
    return np.array([float(np.sum(np.log1p(g))) for g in sinrs])


def _interference_suppressed_gram(h_bar: np.ndarray, v_later: np.ndarray) -> np.ndarray:
    """Gram matrix of the equivalent channel after MMSE suppression of the
    still-active later streams: h^H (I + sum h v v^H h^H)^{-1} h."""
    n = h_bar.shape[0]
    x = np.eye(n, dtype=complex)
    if v_later.shape[1]:
        hv = h_bar @ v_later
        x = x + hv @ hv.conj().T
    return h_bar.conj().T @ np.linalg.solve(x, h_bar)


def equal_sinr_precoder(h_equiv: np.ndarray, sigma: np.ndarray, m_streams: int):
    """Unitary mixing that equalizes the MMSE-SIC SINRs of all streams.

    For a link with interference-whitened channel ``h_equiv`` and input
    covariance ``sigma`` carrying mutual information I, returns a unitary
    ``v`` (m x m) and the scaled precoder ``t_scaled = t_base @ v`` whose m
    streams all achieve SINR exp(I/m) - 1 under MMSE-SIC reception.

    The mixing vectors are chosen by backward induction: at step m the
    eigenvectors of the suppressed-channel Gram matrix are projected onto
    the subspace orthogonal to the already-fixed vectors, and the new
    vector is a two-eigenvector combination placed exactly at the target.
    """
    h_equiv = np.asarray(h_equiv, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    t_base, powers = decompose_eigen(sigma)
    rank = t_base.shape[1]
    if m_streams < rank:
        raise ValueError(f"need at least rank(sigma)={rank} streams, got {m_streams}")
    scaled = t_base * np.sqrt(powers)
    if m_streams > rank:
        pad = np.zeros((sigma.shape[0], m_streams - rank), dtype=complex)
        scaled = np.hstack([scaled, pad])
    h_bar = h_equiv @ scaled
    gram = h_bar @ h_bar.conj().T
    sign, logdet = np.linalg.slogdet(np.eye(gram.shape[0]) + gram)
    info = float(logdet)
    tau = np.expm1(info / m_streams)

    v = np.zeros((m_streams, m_streams), dtype=complex)
    for m in range(m_streams - 1, -1, -1):
        chosen = v[:, m + 1:]
        basis = _orthonormal_complement(chosen, m_streams)
        a_m = _interference_suppressed_gram(h_bar, chosen)
        # Project the eigenvectors of a_m onto the free subspace, keeping
        # the original eigenvalue weights, then diagonalize there.
        w_a, u_a = eigh_desc(a_m)
        proj = basis @ (basis.conj().T @ u_a)
        a_tilde = basis.conj().T @ ((proj * w_a) @ proj.conj().T) @ basis
        w_t, u_t = eigh_desc(a_tilde)
        w_t = np.maximum(w_t, 0.0)
        lam_hi, lam_lo = float(w_t[0]), float(w_t[m])
        if lam_hi - lam_lo <= 1e-12 * max(1.0, lam_hi):
            v[:, m] = basis @ u_t[:, 0]
        else:
            frac = (tau - lam_lo) / (lam_hi - lam_lo)
            frac = min(max(frac, 0.0), 1.0)
            vec = np.sqrt(frac) * u_t[:, 0] + np.sqrt(1.0 - frac) * u_t[:, m]
            v[:, m] = basis @ vec
        v[:, m] = phase_normalize(v[:, m])
    return v, scaled @ v


def _orthonormal_complement(vectors: np.ndarray, dim: int) -> np.ndarray:
    from .linalg import complement_basis

    return complement_basis(vectors, dim)


def equal_power_precoder(sigma: np.ndarray, m_streams: int) -> np.ndarray:
    """Precoder whose streams carry equal power Tr(sigma)/m.

    Spreads the eigen-decomposition through a truncated DFT matrix; the
    constant modulus of the DFT rows makes every column norm equal while
    the reconstruction ``t @ t^H == sigma`` is preserved exactly.
    """
    sigma = np.asarray(sigma, dtype=complex)
    n = sigma.shape[0]
    w, v = eigh_desc(sigma)
    w = np.maximum(w, 0.0)
    rank = numerical_rank(w, n)
    if m_streams < rank:
        raise ValueError(f"need at least rank(sigma)={rank} streams, got {m_streams}")
    # 0-based DFT with entries exp(-2j pi k l / m) / sqrt(m).
    k_idx = np.arange(m_streams)
    f = np.exp(-2j * np.pi * np.outer(k_idx, k_idx) / m_streams) / np.sqrt(m_streams)
    if m_streams >= n:
        f0 = f[:n, :]
    else:
        f0 = np.vstack([f, np.zeros((n - m_streams, m_streams), dtype=complex)])
    return (v * np.sqrt(w)) @ f0


def strategy_from_scaled(scaled_columns) -> tuple:
    """Split scaled precoder columns into unit vectors and powers."""
    t_cols = []
    powers = []
    for j in range(scaled_columns.shape[1]):
        col = scaled_columns[:, j]
        pw = float(np.vdot(col, col).real)
        powers.append(pw)
        t_cols.append(unit(col) if pw > 0 else unit(np.zeros_like(col)))
    t = np.column_stack(t_cols) if t_cols else scaled_columns.copy()
    return t, np.array(powers)
