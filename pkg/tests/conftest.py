"""Shared builders for test networks."""

import numpy as np
import pytest

from politewf.linalg import complex_gaussian
from politewf.network import EncodingOrder, NetworkSpec, coupling_from_order, with_coupling


def random_ic(rng, n_links, n_tx, n_rx, cross_gain=1.0):
    """Fully coupled interference channel; every link has its own nodes."""
    h = [[complex_gaussian(rng, (n_rx, n_tx)) * (1.0 if l == k else np.sqrt(cross_gain))
          for k in range(n_links)] for l in range(n_links)]
    phi = np.ones((n_links, n_links)) - np.eye(n_links)
    return NetworkSpec(h=h, coupling=phi,
                       tx_group=tuple(range(n_links)),
                       rx_group=tuple(range(n_links, 2 * n_links)))


def random_mixed_net(rng, n_links, max_ant=4):
    """Interference network with random per-link antenna counts."""
    n_tx = [int(rng.integers(1, max_ant + 1)) for _ in range(n_links)]
    n_rx = [int(rng.integers(1, max_ant + 1)) for _ in range(n_links)]
    h = [[complex_gaussian(rng, (n_rx[l], n_tx[k])) for k in range(n_links)]
         for l in range(n_links)]
    phi = np.ones((n_links, n_links)) - np.eye(n_links)
    return NetworkSpec(h=h, coupling=phi,
                       tx_group=tuple(range(n_links)),
                       rx_group=tuple(range(n_links, 2 * n_links)))


def mac_network(rng, n_users=2, n_tx=2, n_rx=4, decode_order=None, channel_scale=None):
    """Multiaccess channel: separate transmitters, one shared receiver.

    All links see the same physical channel from each transmitter.
    """
    scale = channel_scale or [1.0] * n_users
    hk = [np.sqrt(scale[k]) * complex_gaussian(rng, (n_rx, n_tx)) for k in range(n_users)]
    h = [[hk[k] for k in range(n_users)] for _ in range(n_users)]
    base = NetworkSpec(h=h, coupling=np.zeros((n_users, n_users)),
                       tx_group=tuple(range(n_users)), rx_group=("rx",) * n_users)
    order = EncodingOrder(
        encode={k: (k,) for k in range(n_users)},
        decode={"rx": tuple(decode_order if decode_order is not None else range(n_users))},
    )
    return with_coupling(base, coupling_from_order(base, order)), order


def scalar_mac(hvals, decode_order=(0, 1)):
    """Scalar two-user MAC with explicit channel values."""
    n = len(hvals)
    h = [[np.array([[hvals[k]]], dtype=complex) for k in range(n)] for _ in range(n)]
    base = NetworkSpec(h=h, coupling=np.zeros((n, n)),
                       tx_group=tuple(range(n)), rx_group=("rx",) * n)
    order = EncodingOrder(encode={k: (k,) for k in range(n)}, decode={"rx": tuple(decode_order)})
    return with_coupling(base, coupling_from_order(base, order)), order


FIG2_REACH = {("r12", "t1"), ("r12", "t23"), ("r12", "t4"),
              ("r3", "t23"), ("r3", "t4"), ("r4", "t4")}

FIG2_COUPLING_A = np.array([[0, 1, 1, 1],
                            [0, 0, 1, 1],
                            [0, 0, 0, 1],
                            [0, 0, 0, 0]], dtype=float)


def fig2_network(rng, n_ant=2):
    """Random instance of the four-link looped tree topology."""
    tx = ("t1", "t23", "t23", "t4")
    rx = ("r12", "r12", "r3", "r4")
    chan = {}
    for rp in ("r12", "r3", "r4"):
        for tp in ("t1", "t23", "t4"):
            chan[(rp, tp)] = complex_gaussian(rng, (n_ant, n_ant)) \
                if (rp, tp) in FIG2_REACH else np.zeros((n_ant, n_ant), dtype=complex)
    h = [[chan[(rx[l], tx[k])] for k in range(4)] for l in range(4)]
    return NetworkSpec(h=h, coupling=FIG2_COUPLING_A, tx_group=tx, rx_group=rx)


def single_link(h):
    h = np.asarray(h, dtype=complex)
    return NetworkSpec(h=[[h]], coupling=np.zeros((1, 1)), tx_group=(0,), rx_group=(1,))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
