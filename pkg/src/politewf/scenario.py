"""Scenario schema, presets, seeded channel generation and batch drivers.

A scenario is a fully serializable problem statement: topology (node
grouping, antenna counts, per-pair gains in dB), coupling matrix or
DPC/SIC order, rate targets in bits, RNG seed, and solver selection with
options.  The same scenario and seed always rebuild byte-identical
channels and run records.

Reproducibility contract (schema version 1): channels are drawn from
numpy's PCG64 generator seeded through ``SeedSequence(seed)``; child 0 of
the sequence drives channel draws and child 1 solver-internal randomness
(multistart perturbations), so scenario channels never depend on solver
options.  One white channel matrix is drawn per physical (receiver node,
transmitter node) pair, in order of first appearance, so links sharing a
node share the physical channel and gain changes do not reshuffle draws.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .distributed import run_prd
from .network import EncodingOrder, NetworkSpec, coupling_from_order, with_coupling
from .solvers import (
    SolveReport,
    Targets,
    algorithm_a,
    algorithm_b,
    algorithm_o,
    algorithm_pr,
    algorithm_pr1,
    fop_via_pr1,
)

SCHEMA_VERSION = 1
SOLVERS = ("a", "b", "pr", "pr1", "prd", "fop-pr1")
FOP_SOLVERS = ("a", "fop-pr1")


@dataclass(frozen=True)
class Scenario:
    """One reproducible problem instance plus the solver to run on it."""

    name: str
    tx_group: tuple
    rx_group: tuple
    tx_antennas: tuple
    rx_antennas: tuple
    gains_db: tuple
    targets_bits: tuple
    seed: int = 0
    coupling: tuple = None
    order: dict = None
    channels: tuple = None
    p_total: float = None
    solver: str = "pr1"
    options: dict = field(default_factory=dict)

    @property
    def n_links(self) -> int:
        return len(self.tx_group)

    def to_dict(self) -> dict:
        d = {
            "version": SCHEMA_VERSION,
            "name": self.name,
            "links": self.n_links,
            "tx_group": list(self.tx_group),
            "rx_group": list(self.rx_group),
            "tx_antennas": list(self.tx_antennas),
            "rx_antennas": list(self.rx_antennas),
            "gains_db": [list(row) for row in self.gains_db],
            "targets_bits": list(self.targets_bits),
            "seed": self.seed,
            "coupling": None if self.coupling is None else [list(r) for r in self.coupling],
            "order": self.order,
            "channels": self.channels,
            "p_total": self.p_total,
            "solver": self.solver,
            "options": dict(sorted(self.options.items())),
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if d.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema version {d.get('version')!r}")
        return cls(
            name=d["name"],
            tx_group=tuple(d["tx_group"]),
            rx_group=tuple(d["rx_group"]),
            tx_antennas=tuple(d["tx_antennas"]),
            rx_antennas=tuple(d["rx_antennas"]),
            gains_db=tuple(tuple(row) for row in d["gains_db"]),
            targets_bits=tuple(d["targets_bits"]),
            seed=int(d["seed"]),
            coupling=None if d.get("coupling") is None else tuple(tuple(r) for r in d["coupling"]),
            order=d.get("order"),
            channels=d.get("channels"),
            p_total=d.get("p_total"),
            solver=d.get("solver", "pr1"),
            options=dict(d.get("options", {})),
        )

    def hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def matrix_to_pairs(m: np.ndarray) -> list:
    """Complex matrix as nested [re, im] pairs, row-major."""
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def pairs_to_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _encoding_order_from_dict(d: dict) -> EncodingOrder:
    return EncodingOrder(
        encode={k: tuple(v) for k, v in d["encode"].items()},
        decode={k: tuple(v) for k, v in d["decode"].items()},
    )


def _encoding_order_to_dict(order: EncodingOrder) -> dict:
    return {
        "encode": {k: list(v) for k, v in order.encode.items()},
        "decode": {k: list(v) for k, v in order.decode.items()},
    }


def channel_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])


def solver_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])


def build_network(sc: Scenario):
    """Deterministic network instance plus the scenario's DPC/SIC order.

    Draws one unit-variance white matrix per physical node pair (first
    appearance order), scales by the per-pair gain, and validates that
    links sharing node pairs agree on the gain.
    """
    n = sc.n_links
    rx_nodes = list(dict.fromkeys(sc.rx_group))
    tx_nodes = list(dict.fromkeys(sc.tx_group))
    rx_ant = {}
    tx_ant = {}
    for l in range(n):
        rx_ant.setdefault(sc.rx_group[l], sc.rx_antennas[l])
        tx_ant.setdefault(sc.tx_group[l], sc.tx_antennas[l])
        if rx_ant[sc.rx_group[l]] != sc.rx_antennas[l] or tx_ant[sc.tx_group[l]] != sc.tx_antennas[l]:
            raise ValueError("links sharing a node disagree on its antenna count")
    pair_gain = {}
    for l in range(n):
        for k in range(n):
            pair = (sc.rx_group[l], sc.tx_group[k])
            g = sc.gains_db[l][k]
            if pair in pair_gain and pair_gain[pair] != g:
                raise ValueError(f"links sharing node pair {pair} disagree on the gain")
            pair_gain[pair] = g
    rng = channel_rng(sc.seed)
    white = {}
    for rp in rx_nodes:
        for tp in tx_nodes:
            draw = (rng.standard_normal((rx_ant[rp], tx_ant[tp]))
                    + 1j * rng.standard_normal((rx_ant[rp], tx_ant[tp]))) / np.sqrt(2.0)
            white[(rp, tp)] = draw
    h = []
    for l in range(n):
        row = []
        for k in range(n):
            pair = (sc.rx_group[l], sc.tx_group[k])
            g = pair_gain[pair]
            if sc.channels is not None and sc.channels[l][k] is not None:
                row.append(pairs_to_matrix(sc.channels[l][k]))
            elif g is None:
                row.append(np.zeros((sc.rx_antennas[l], sc.tx_antennas[k]), dtype=complex))
            else:
                row.append(np.sqrt(10.0 ** (g / 10.0)) * white[pair])
        h.append(tuple(row))
    base = NetworkSpec(h=tuple(h), coupling=np.zeros((n, n)),
                       tx_group=sc.tx_group, rx_group=sc.rx_group)
    order = None
    if sc.order is not None:
        order = _encoding_order_from_dict(sc.order)
        coupling = coupling_from_order(base, order)
    elif sc.coupling is not None:
        coupling = np.array([[0.0 if v is None else float(v) for v in row] for row in sc.coupling])
    else:
        raise ValueError("scenario needs either a coupling matrix or a DPC/SIC order")
    return with_coupling(base, coupling), order


# ----------------------------------------------------------------------
# Presets mirroring the standard experiment topologies.
# ----------------------------------------------------------------------


def _full_gains(n: int, diag_db: float = 0.0, cross_db: float = 0.0) -> tuple:
    return tuple(tuple(diag_db if l == k else cross_db for k in range(n)) for l in range(n))


def preset_single(seed=0, targets_bits=None, **_):
    """One scalar link with a unit channel; every solver has a closed form."""
    bits = tuple(targets_bits) if targets_bits else (2.0,)
    unit_channel = [[[1.0, 0.0]]]
    return Scenario(
        name="single", tx_group=(0,), rx_group=(1,), tx_antennas=(1,), rx_antennas=(1,),
        gains_db=((0.0,),), coupling=((0,),), targets_bits=bits, seed=seed,
        channels=((unit_channel,),), p_total=10.0,
    )


def preset_ic3(seed=0, targets_bits=None, antennas=4, cross_db=0.0, **_):
    """Three-user interference channel, every node its own link."""
    bits = tuple(targets_bits) if targets_bits else (5.0, 5.0, 5.0)
    return Scenario(
        name="ic3" if cross_db == 0.0 else "ic3-strong",
        tx_group=(0, 1, 2), rx_group=(3, 4, 5),
        tx_antennas=(antennas,) * 3, rx_antennas=(antennas,) * 3,
        gains_db=_full_gains(3, cross_db=cross_db),
        coupling=((0, 1, 1), (1, 0, 1), (1, 1, 0)),
        targets_bits=bits, seed=seed, p_total=30.0,
    )


def preset_ic3_strong(seed=0, targets_bits=None, antennas=4, **_):
    return preset_ic3(seed=seed, targets_bits=targets_bits, antennas=antennas, cross_db=10.0)


def _mac_scenario(name, n_users, bits, seed, lt, lr):
    order = {"encode": {f"t{k}": [k] for k in range(n_users)},
             "decode": {"rx": list(range(n_users))}}
    return Scenario(
        name=name, tx_group=tuple(f"t{k}" for k in range(n_users)), rx_group=("rx",) * n_users,
        tx_antennas=(lt,) * n_users, rx_antennas=(lr,) * n_users,
        gains_db=_full_gains(n_users), order=order,
        targets_bits=tuple(bits), seed=seed, p_total=10.0,
    )


def preset_mac2(seed=0, targets_bits=None, lt=2, lr=4, **_):
    """Two-user MAC with SIC; link 0 decoded first."""
    bits = tuple(targets_bits) if targets_bits else (2.0, 2.0)
    return _mac_scenario("mac2", 2, bits, seed, lt, lr)


def preset_mac4(seed=0, targets_bits=None, rs_bits=8.0, unequal=False, lt=2, lr=4, **_):
    """Four-user MAC; equal split or the 1:2:4:8 unequal split of a total rate."""
    if targets_bits:
        bits = tuple(targets_bits)
    elif unequal:
        bits = tuple(rs_bits * w / 15.0 for w in (1.0, 2.0, 4.0, 8.0))
    else:
        bits = (rs_bits / 4.0,) * 4
    return _mac_scenario("mac4-unequal" if unequal else "mac4", 4, bits, seed, lt, lr)


def preset_mac4_unequal(seed=0, targets_bits=None, rs_bits=8.0, **_):
    return preset_mac4(seed=seed, targets_bits=targets_bits, rs_bits=rs_bits, unequal=True)


def preset_fig1(seed=0, targets_bits=None, rs_bits=8.0, antennas=4, **_):
    """Five-link network mixing broadcast and multiaccess sides.

    Transmitter A carries links 0 and 1, transmitter C links 3 and 4;
    receiver Q decodes links 1, 2 and 3.  The default DPC/SIC order encodes
    link 0 after link 1, decodes link 3 last at Q, and encodes link 3 after
    link 4, which leaves {1, 2} as a pseudo MAC and {3, 4} as a pseudo BC.
    """
    if targets_bits:
        bits = tuple(targets_bits)
    else:
        bits = tuple(rs_bits * w / 16.0 for w in (1.0, 1.0, 2.0, 4.0, 8.0))
    order = {
        "encode": {"A": [1, 0], "B": [2], "C": [4, 3]},
        "decode": {"P": [0], "Q": [1, 2, 3], "R": [4]},
    }
    return Scenario(
        name="fig1",
        tx_group=("A", "A", "B", "C", "C"), rx_group=("P", "Q", "Q", "Q", "R"),
        tx_antennas=(antennas,) * 5, rx_antennas=(antennas,) * 5,
        gains_db=_full_gains(5), order=order,
        targets_bits=bits, seed=seed, p_total=50.0,
    )


_FIG2_REACH = {("r12", "t1"), ("r12", "t23"), ("r12", "t4"),
               ("r3", "t23"), ("r3", "t4"), ("r4", "t4")}


def _fig2_scenario(name, coupling, seed, bits, antennas):
    tx = ("t1", "t23", "t23", "t4")
    rx = ("r12", "r12", "r3", "r4")
    gains = tuple(tuple(0.0 if (rx[l], tx[k]) in _FIG2_REACH else None for k in range(4))
                  for l in range(4))
    return Scenario(
        name=name, tx_group=tx, rx_group=rx,
        tx_antennas=(antennas,) * 4, rx_antennas=(antennas,) * 4,
        gains_db=gains, coupling=coupling,
        targets_bits=tuple(bits), seed=seed, p_total=30.0,
    )


def preset_fig2_order_a(seed=0, targets_bits=None, antennas=4, **_):
    """Four-link looped topology that is an interference tree.

    Receiver r12 decodes link 1 after link 0 (SIC) and transmitter t23
    encodes link 2 after link 1 (DPC), so under the natural indexing no
    link is interfered by earlier links.
    """
    bits = tuple(targets_bits) if targets_bits else (2.0, 2.0, 2.0, 2.0)
    coupling = ((0, 1, 1, 1), (0, 0, 1, 1), (0, 0, 0, 1), (0, 0, 0, 0))
    return _fig2_scenario("fig2-orderA", coupling, seed, bits, antennas)


def preset_fig2_order_b(seed=0, targets_bits=None, antennas=4, **_):
    """Same topology without SIC at r12 and with the DPC order flipped;
    links 0 and 1 interfere mutually, so no tree ordering exists."""
    bits = tuple(targets_bits) if targets_bits else (2.0, 2.0, 2.0, 2.0)
    coupling = ((0, 1, 1, 1), (1, 0, 0, 1), (0, 1, 0, 1), (0, 0, 0, 0))
    return _fig2_scenario("fig2-orderB", coupling, seed, bits, antennas)


PRESETS = {
    "single": preset_single,
    "ic3": preset_ic3,
    "ic3-strong": preset_ic3_strong,
    "mac2": preset_mac2,
    "mac4": preset_mac4,
    "mac4-unequal": preset_mac4_unequal,
    "fig1": preset_fig1,
    "fig2-orderA": preset_fig2_order_a,
    "fig2-orderB": preset_fig2_order_b,
}


def generate_scenario(preset: str = None, config: dict = None, **kwargs) -> Scenario:
    """Build a scenario from a named preset or a parsed config dict."""
    if (preset is None) == (config is None):
        raise ValueError("specify exactly one of preset / config")
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        return PRESETS[preset](**kwargs)
    return Scenario.from_dict(config)


# ----------------------------------------------------------------------
# Run / batch / region drivers.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    scenario_hash: str
    seed: int
    solver: str
    options: dict
    trace: tuple
    summary: dict

    def to_json(self) -> str:
        payload = {
            "scenario_hash": self.scenario_hash,
            "seed": self.seed,
            "solver": self.solver,
            "options": dict(sorted(self.options.items())),
            "trace": list(self.trace),
            "summary": self.summary,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _db(power: float):
    return None if power <= 0 else float(10.0 * np.log10(power))


def _trace_rows(report: SolveReport, n_links: int) -> tuple:
    rows = []
    for it in report.iterates:
        row = {"step": float(it.step), "sum_power": float(it.sum_power), "sum_power_db": _db(it.sum_power)}
        for l in range(n_links):
            row[f"rate_bits_{l + 1}"] = float(it.rates[l] / np.log(2.0))
        row["max_pwf_residual"] = None if np.isnan(it.max_residual) else float(it.max_residual)
        rows.append(row)
    return tuple(rows)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def trace_csv(record: RunRecord) -> str:
    if not record.trace:
        return ""
    cols = list(record.trace[0].keys())
    lines = [",".join(cols)]
    for row in record.trace:
        lines.append(",".join(_csv_cell(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def dispatch_solver(net: NetworkSpec, targets: Targets, sc: Scenario, *,
                    rng: np.random.Generator = None) -> SolveReport:
    opts = sc.options
    common = {"trace_residuals": bool(opts.get("trace_residuals", False))}
    if rng is not None:
        common["rng"] = rng
    tol = opts.get("tol")
    if tol is not None:
        common["tol"] = float(tol)
    max_iters = opts.get("max_iters")
    if max_iters is not None:
        common["max_iters"] = int(max_iters)
    solver = sc.solver
    if solver == "a":
        return algorithm_a(net, targets, _require_budget(sc), **common)
    if solver == "b":
        return algorithm_b(net, targets, **common)
    if solver == "pr":
        return algorithm_pr(net, targets, **common)
    if solver == "pr1":
        return algorithm_pr1(net, targets, **common)
    if solver == "fop-pr1":
        common.pop("trace_residuals", None)
        return fop_via_pr1(net, targets, _require_budget(sc), **common)
    if solver == "prd":
        common.pop("trace_residuals", None)
        common.pop("tol", None)
        common.pop("max_iters", None)
        half_rounds = int(round(2 * float(sc.options.get("rounds", 3.5))))
        return run_prd(net, targets, half_rounds,
                       p_max=sc.options.get("pmax"),
                       beta=float(sc.options.get("beta", 1.0)), **common)
    raise ValueError(f"unknown solver {solver!r}; known: {SOLVERS}")


def _require_budget(sc: Scenario) -> float:
    if sc.p_total is None:
        raise ValueError(f"solver {sc.solver!r} needs a total power budget")
    return float(sc.p_total)


def _targets_met(report: SolveReport, targets: Targets, tol: float = 1e-6) -> bool:
    return bool(np.all(report.rates >= targets.rates - tol))


def _better(sc: Scenario, a: SolveReport, b: SolveReport, targets: Targets) -> SolveReport:
    """Pick the better of two reports for the scenario's problem flavor."""
    if sc.solver in FOP_SOLVERS:
        return a if (a.alpha or -np.inf) >= (b.alpha or -np.inf) else b
    a_ok = a.converged and _targets_met(a, targets)
    b_ok = b.converged and _targets_met(b, targets)
    if a_ok != b_ok:
        return a if a_ok else b
    return a if a.sum_power <= b.sum_power else b


def run(sc: Scenario) -> RunRecord:
    """Execute the scenario's solver, with optional multistart and order search."""
    net, order = build_network(sc)
    targets = Targets.from_bits(sc.targets_bits)
    multistart = int(sc.options.get("multistart", 1))
    order_opt = bool(sc.options.get("order_opt", False))

    final_order = None
    if order_opt:
        if order is None:
            raise ValueError("order optimization needs a scenario with a DPC/SIC order")
        if sc.solver not in ("pr", "pr1", "fop-pr1"):
            raise ValueError("order optimization needs a water-filling solver (pr, pr1, fop-pr1)")

        def inner(current_net, current_targets):
            inner_sc = dataclasses.replace(sc, options={k: v for k, v in sc.options.items()
                                                        if k not in ("order_opt", "multistart")})
            return dispatch_solver(current_net, current_targets, inner_sc)

        objective = "alpha" if sc.solver in FOP_SOLVERS else "power"
        final_order, report = algorithm_o(net, targets, inner, order, objective=objective)
    else:
        report = dispatch_solver(net, targets, sc)
        if multistart > 1:
            streams = np.random.SeedSequence(sc.seed).spawn(2)[1].spawn(multistart - 1)
            for child in streams:
                candidate = dispatch_solver(net, targets, sc, rng=np.random.default_rng(child))
                report = _better(sc, report, candidate, targets)

    summary = {
        "status": report.status,
        "sum_power": float(report.sum_power),
        "sum_power_db": _db(report.sum_power),
        "rate_bits": [float(b) for b in report.rates / np.log(2.0)],
        "targets_bits": [float(b) for b in sc.targets_bits],
        "targets_met": _targets_met(report, targets),
        "alpha": None if report.alpha is None else float(report.alpha),
        "c_max": None if report.c_max is None else float(report.c_max),
        "nu": None if report.nu is None else [float(v) for v in report.nu],
        "sigma": [matrix_to_pairs(m) for m in report.sigma],
        "iterations": len(report.iterates),
    }
    if final_order is not None:
        summary["order"] = _encoding_order_to_dict(final_order)
    return RunRecord(
        scenario_hash=sc.hash(),
        seed=sc.seed,
        solver=sc.solver,
        options=dict(sc.options),
        trace=_trace_rows(report, sc.n_links),
        summary=summary,
    )


def _run_seed(args) -> tuple:
    sc_dict, seed = args
    sc = Scenario.from_dict(sc_dict)
    sc = dataclasses.replace(sc, seed=seed)
    try:
        record = run(sc)
        return seed, record, None
    except Exception as err:  # noqa: BLE001 - batch keeps going, error is recorded
        return seed, None, f"{type(err).__name__}: {err}"


def batch(sc: Scenario, n_seeds: int, jobs: int = 1) -> dict:
    """Run ``n_seeds`` consecutive seeds and aggregate summary statistics."""
    seeds = [sc.seed + i for i in range(n_seeds)]
    tasks = [(sc.to_dict(), s) for s in seeds]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_seed, tasks))
    else:
        results = [_run_seed(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    records = [r for _, r, _ in results if r is not None]
    errors = {s: e for s, _, e in results if e is not None}
    powers = np.array([r.summary["sum_power"] for r in records])
    met = np.array([r.summary["targets_met"] for r in records], dtype=bool)
    summary = {
        "scenario_hash": sc.hash(),
        "solver": sc.solver,
        "n_seeds": n_seeds,
        "n_completed": len(records),
        "n_targets_met": int(met.sum()),
        "fraction_targets_met": float(met.mean()) if met.size else None,
        "sum_power_mean": float(powers.mean()) if powers.size else None,
        "sum_power_mean_db": _db(float(powers.mean())) if powers.size else None,
        "sum_power_p10": float(np.percentile(powers, 10)) if powers.size else None,
        "sum_power_p50": float(np.percentile(powers, 50)) if powers.size else None,
        "sum_power_p90": float(np.percentile(powers, 90)) if powers.size else None,
        "errors": errors,
    }
    return {"summary": summary, "records": records}


def region(sc: Scenario, n_rays: int = 11) -> list:
    """Sweep target-ray directions and return boundary points of the region.

    Uses the scenario's feasibility solver (falls back to the balancing
    solver) along rays through the positive orthant; each returned row is
    the achieved boundary point on one ray.
    """
    if sc.solver not in FOP_SOLVERS:
        sc = dataclasses.replace(sc, solver="a")
    n = sc.n_links
    if n == 2:
        angles = [(j + 1) / (n_rays + 1) * np.pi / 2 for j in range(n_rays)]
        directions = [np.array([np.cos(a), np.sin(a)]) for a in angles]
    else:
        rng = solver_rng(sc.seed)
        directions = [d / d.sum() for d in rng.dirichlet(np.ones(n), size=n_rays)]
    rows = []
    for j, direction in enumerate(directions):
        ray_sc = dataclasses.replace(sc, targets_bits=tuple(float(v) for v in direction))
        record = run(ray_sc)
        row = {"ray": j, "alpha": record.summary["alpha"],
               "sum_power": record.summary["sum_power"], "status": record.summary["status"]}
        for l in range(n):
            row[f"target_bits_{l + 1}"] = float(direction[l])
            row[f"rate_bits_{l + 1}"] = record.summary["rate_bits"][l]
        rows.append(row)
    return rows
