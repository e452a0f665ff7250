"""Experiment drivers behind the command line: HRF and FQST sweeps, bound checks, properties, timing."""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fqst as fq
from .forest import HypercubeGraph, generate_forest
from .hrf import (
    EdgeSignOracle,
    default_n_tree,
    edge_error_bound,
    forest_signs,
    majority_vote,
    reconstruct_from_probs,
    tree_error_bound,
    voting_error_bound,
)
from .properties import (
    circle_path,
    fidelity,
    log_negativity,
    overlap,
    property_report,
    stabilizer_entropy,
    state_fidelity,
    swap_test,
)
from .sampling import (
    AssignmentMatrix,
    CountTable,
    NoiseModel,
    apply_readout_noise,
    depolarize,
    mitigate_readout,
    sample_counts,
    setting_rng,
)
from .state import RealState, exact_probabilities, hrf_settings, prepare_ansatz, random_ansatz

MODES = ("hrf", "fqst", "props", "bounds", "bench")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "hrf"
    n_qubits: int = 5
    n_samp: int = 10_000
    n_tree: int | None = None
    n_states: int = 10
    seed: int = 0
    noise: str = "none"
    mitigation: bool = True
    n_layers: int = 4
    root: str | int = "max"
    n_tree_sweep: list[int] | None = None
    max_fqst_qubits: int = 6
    bench_qubits: list[int] = field(default_factory=lambda: list(range(2, 12)))
    bench_repeats: int = 3
    mc_trials: int = 10_000
    swap_shots: int = 100_000

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_samp < 1:
            raise ConfigError("n_samp must be >= 1")
        if self.n_tree is not None and self.n_tree < 1:
            raise ConfigError("n_tree must be >= 1")
        if self.n_states < 1:
            raise ConfigError("n_states must be >= 1")
        if not 1 <= self.n_qubits <= 12:
            raise ConfigError("n_qubits must lie in [1, 12]")
        if self.mode == "fqst" and self.n_qubits > self.max_fqst_qubits:
            raise ConfigError(
                f"fqst with {self.n_qubits} qubits exceeds max_fqst_qubits={self.max_fqst_qubits}; raise it to override"
            )
        if self.n_tree_sweep is not None and any(t < 1 for t in self.n_tree_sweep):
            raise ConfigError("n_tree_sweep entries must be >= 1")
        if any(not 1 <= n <= 12 for n in self.bench_qubits):
            raise ConfigError("bench_qubits must lie in [1, 12]")
        return self

    @property
    def resolved_n_tree(self) -> int:
        return default_n_tree(self.n_qubits) if self.n_tree is None else self.n_tree

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["n_tree"] = self.resolved_n_tree
        return d


def resolve_noise(profile: str, n_qubits: int) -> NoiseModel | None:
    """``none``, ``table1``, ``table1-readout`` (no gate noise), or a JSON file path."""
    if profile in ("none", "", None):
        return None
    if profile == "table1":
        return NoiseModel.table1(n_qubits)
    if profile == "table1-readout":
        return NoiseModel.table1(n_qubits, two_qubit=False)
    path = Path(profile)
    if not path.exists():
        raise ConfigError(f"noise profile {profile!r} is neither a known name nor a file")
    try:
        return NoiseModel.from_json(path.read_text())
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad noise file {profile}: {exc}") from exc


def random_state(n_qubits: int, seed: int, index: int, n_layers: int = 4) -> RealState:
    """Ansatz state number ``index`` of a run seeded with ``seed``."""
    return prepare_ansatz(random_ansatz(n_qubits, np.random.default_rng([seed, index, 0]), n_layers))


# ------------------------------------------------------------------ sampling


def sample_hrf(
    state: RealState,
    n_samp: int,
    seed: int,
    stream: int = 0,
    noise: NoiseModel | None = None,
    n_gates: int = 0,
) -> list[CountTable]:
    """Count tables for the Z setting and the ``n`` Hadamard settings, in that order."""
    lam = noise.white_noise_weight(n_gates) if noise is not None else 0.0
    tables = []
    for i, setting in enumerate(hrf_settings(state.n_qubits)):
        rng = setting_rng(seed, stream, i)
        probs = depolarize(exact_probabilities(state, setting), lam)
        table = sample_counts(probs, n_samp, rng, setting)
        if noise is not None:
            table = apply_readout_noise(table, noise, rng)
        tables.append(table)
    return tables


def exact_hrf_probs(state: RealState) -> list[np.ndarray]:
    return [exact_probabilities(state, s) for s in hrf_settings(state.n_qubits)]


def _sweep_fidelities(probs: Sequence[np.ndarray], forest, sweep: Sequence[int], target: RealState, root: int = 0) -> dict:
    per_tree = forest_signs(EdgeSignOracle(probs[0], probs[1:]), forest, root)
    mags = np.sqrt(np.clip(probs[0], 0.0, None))
    out = {}
    for t in sweep:
        amps = majority_vote(per_tree[:t]) * mags
        out[str(t)] = state_fidelity(RealState.from_amplitudes(amps), target)
    return out


# ------------------------------------------------------------------ HRF


def hrf_trial(config: ExperimentConfig, index: int, forest=None, noise: NoiseModel | None = None) -> dict:
    """Prepare, sample, and reconstruct ansatz state ``index``; return its report row."""
    n = config.n_qubits
    target = random_state(n, config.seed, index, config.n_layers)
    n_gates = config.n_layers * (n - 1)
    t0 = time.perf_counter()
    tables = sample_hrf(target, config.n_samp, config.seed, index + 1, noise, n_gates)
    t_sampling = 1e3 * (time.perf_counter() - t0)

    raw = [t.frequencies() for t in tables]
    mitigated = noise is not None and config.mitigation and any(a or b for a, b in noise.for_qubits(n))
    if mitigated:
        assign = AssignmentMatrix.from_noise(noise, n)
        probs = [mitigate_readout(t, assign) for t in tables]
    else:
        probs = raw
    rec = reconstruct_from_probs(
        probs[0], probs[1:], config.resolved_n_tree, config.seed, forest=forest, root=config.root,
        shots=config.n_samp,
    )
    row = {
        "state_index": index,
        "n_qubits": n,
        "n_samp": config.n_samp,
        "n_tree": len(forest) if forest is not None else config.resolved_n_tree,
        "seed": config.seed,
        "fidelity_vs_target": state_fidelity(rec.state, target),
        "amplitudes": rec.state.amplitudes.tolist(),
        "signs": rec.signs.astype(int).tolist(),
        "root": rec.root,
        "timing_ms": {"sampling": t_sampling, "forest": rec.timing_ms["forest"], "voting": rec.timing_ms["voting"]},
    }
    if mitigated:
        unmit = reconstruct_from_probs(raw[0], raw[1:], forest=forest, root=config.root, shots=config.n_samp)
        row["fidelity_unmitigated"] = state_fidelity(unmit.state, target)
    if config.n_tree_sweep:
        sweep_forest = generate_forest(HypercubeGraph(n), max(config.n_tree_sweep), config.seed)
        row["fidelity_by_n_tree"] = _sweep_fidelities(probs, sweep_forest, config.n_tree_sweep, target, rec.root)
        if mitigated:
            row["fidelity_by_n_tree_unmitigated"] = _sweep_fidelities(
                raw, sweep_forest, config.n_tree_sweep, target, unmit.root
            )
    return row


def _mean_std(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def run_hrf(config: ExperimentConfig) -> tuple[list[dict], dict]:
    config.validate()
    n = config.n_qubits
    noise = resolve_noise(config.noise, n)
    forest = generate_forest(HypercubeGraph(n), config.resolved_n_tree, config.seed)
    rows = [hrf_trial(config, i, forest, noise) for i in range(config.n_states)]
    summary = {"mode": "hrf", "config": config.to_dict(), "n_settings": n + 1,
               "fidelity": _mean_std([r["fidelity_vs_target"] for r in rows])}
    if rows and "fidelity_unmitigated" in rows[0]:
        summary["fidelity_unmitigated"] = _mean_std([r["fidelity_unmitigated"] for r in rows])
        summary["mitigation_gain"] = summary["fidelity"]["mean"] - summary["fidelity_unmitigated"]["mean"]
    for key in ("fidelity_by_n_tree", "fidelity_by_n_tree_unmitigated"):
        if rows and key in rows[0]:
            summary[key] = {t: _mean_std([r[key][t] for r in rows]) for t in rows[0][key]}
    return rows, summary


# ------------------------------------------------------------------ FQST


def run_fqst(config: ExperimentConfig) -> tuple[list[dict], dict]:
    config.validate()
    n = config.n_qubits
    noise = resolve_noise(config.noise, n)
    n_gates = config.n_layers * (n - 1)
    assign = AssignmentMatrix.from_noise(noise, n) if (noise is not None and config.mitigation) else None
    rows = []
    for i in range(config.n_states):
        target = random_state(n, config.seed, i, config.n_layers)
        t0 = time.perf_counter()
        tables = fq.measure_all(target, config.n_samp, noise, config.seed, n_gates, stream=(i + 1,))
        t1 = time.perf_counter()
        if assign is not None:
            tables = {k: mitigate_readout(t, assign) for k, t in tables.items()}
        rho = fq.project_physical(fq.linear_inversion(tables, n))
        t2 = time.perf_counter()
        rows.append({
            "state_index": i,
            "n_qubits": n,
            "n_samp": config.n_samp,
            "seed": config.seed,
            "n_settings": len(tables),
            "fidelity_vs_target": fidelity(target, rho),
            "timing_ms": {"sampling": 1e3 * (t1 - t0), "inversion": 1e3 * (t2 - t1)},
        })
    summary = {"mode": "fqst", "config": config.to_dict(), "n_settings": 3**n,
               "fidelity": _mean_std([r["fidelity_vs_target"] for r in rows])}
    return rows, summary


# ------------------------------------------------------------------ properties


def run_props(config: ExperimentConfig) -> tuple[list[dict], dict]:
    """Exact vs HRF-reconstructed log-negativity, M_2, and circle-path overlap per state."""
    config.validate()
    n = config.n_qubits
    noise = resolve_noise(config.noise, n)
    forest = generate_forest(HypercubeGraph(n), config.resolved_n_tree, config.seed)
    index = circle_path(n) if n % 2 == 0 else None
    rows = []
    for i in range(config.n_states):
        trial = hrf_trial(config, i, forest, noise)
        target = random_state(n, config.seed, i, config.n_layers)
        recon = RealState.from_amplitudes(trial["amplitudes"])
        reports = []
        if n >= 2:
            reports.append(property_report("log_negativity", log_negativity(target), log_negativity(recon)))
        if n <= 8:
            reports.append(property_report("stabilizer_entropy_2", stabilizer_entropy(target), stabilizer_entropy(recon)))
        if index is not None:
            exact = overlap(target, index)
            reports.append(property_report("path_overlap", exact, overlap(recon, index)))
            swap = swap_test(target, index.state, config.swap_shots, noise, setting_rng(config.seed, i + 1, 10**6))
            reports.append(property_report("path_overlap_swap_test", exact, swap))
        rows.append({"state_index": i, "fidelity_vs_target": trial["fidelity_vs_target"], "properties": reports})
    summary = {"mode": "props", "config": config.to_dict()}
    names = [r["property"] for r in rows[0]["properties"]]
    summary["relative_difference"] = {
        name: _mean_std([p["relative_difference"] for r in rows for p in r["properties"] if p["property"] == name])
        for name in names
    }
    return rows, summary


# ------------------------------------------------------------------ bounds


def simulate_edge_errors(amp_j: float, amp_k: float, n_samp: int, trials: int, seed: int) -> float:
    """Frequency of a wrong inferred sign across one edge under multinomial shot noise.

    Uses the 2-qubit state ``(amp_j, amp_k, r, 0)`` with the rest of the norm on
    basis state 2, so edge ``(0, 1)`` carries the tested amplitudes.
    """
    rest = 1.0 - amp_j**2 - amp_k**2
    if rest < -1e-12:
        raise ValueError("amplitudes exceed unit norm")
    state = RealState.from_amplitudes([amp_j, amp_k, np.sqrt(max(rest, 0.0)), 0.0])
    z, x0, x1 = exact_hrf_probs(state)
    truth = 1 if amp_j * amp_k >= 0 else -1
    wrong = 0
    for t in range(trials):
        rng = setting_rng(seed, t)
        zf = sample_counts(z, n_samp, rng).frequencies()
        # edge (0, 1) only reads the bit-0 Hadamard setting
        xf = sample_counts(x0, n_samp, rng).frequencies()
        table = EdgeSignOracle(zf, [xf, x1]).edge_table()
        wrong += int(table[0, 0] != truth)
    return wrong / trials


def simulate_tree_errors(p_e: float, L: int, trials: int, seed: int) -> dict:
    """Flip every tree edge independently with ``p_e``; report sign-error rates.

    Returns the error rate at the depth-``L`` node and averaged over all nodes.
    """
    tree = generate_forest(HypercubeGraph(L), 1, seed)[0]
    rng = np.random.default_rng([seed, 1])
    flips = rng.random((trials, tree.n_nodes)) < p_e
    flips[:, 0] = False
    wrong = np.zeros_like(flips)
    for j in tree.layer_order[1:]:
        wrong[:, j] = flips[:, j] ^ wrong[:, tree.parent[j]]
    deep = wrong[:, -1]
    return {
        "deepest": float(deep.mean()),
        "deepest_se": float(deep.std(ddof=1) / np.sqrt(trials)),
        "all_nodes": float(wrong[:, 1:].mean()),
    }


def simulate_vote_errors(p_j: float, n_tree: int, trials: int, seed: int) -> dict:
    """Independent per-tree flips of a +1 sign; fraction of trials whose vote comes out -1."""
    rng = np.random.default_rng([seed, 2])
    votes = np.where(rng.random((n_tree, trials)) < p_j, -1, 1)
    wrong = majority_vote(votes) < 0
    return {"error": float(wrong.mean()), "se": float(wrong.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0}


def edge_error_grid(n_samp: int = 100_000, points: int = 101) -> dict:
    """Hoeffding bound over ``(|psi_j|**2, |psi_k|**2)`` with the two summing to at most 1."""
    p = np.linspace(0.0, 1.0, points)
    pj, pk = np.meshgrid(p, p, indexing="ij")
    grid = np.exp(-2.0 * n_samp * pj * pk)
    grid[pj + pk > 1.0] = np.nan
    return {"prob": p, "p_e": grid}


def run_bounds(config: ExperimentConfig) -> tuple[list[dict], dict]:
    """Monte-Carlo error frequencies side by side with the analytic bounds."""
    config.validate()
    trials = config.mc_trials
    rows = []

    def add(kind, params, empirical, se, bound):
        rows.append({"kind": kind, **params, "empirical": empirical, "se": se, "bound": bound,
                     "violates": bool(empirical > bound + 3 * se)})

    for a, b, ns in ((0.05, 0.5, 200), (0.1, 0.3, 100), (0.2, 0.2, 50)):
        n_edge = min(trials, 1000)
        emp = simulate_edge_errors(a, b, ns, n_edge, config.seed)
        add("edge", {"amp_j": a, "amp_k": b, "n_samp": ns}, emp, np.sqrt(emp * (1 - emp) / n_edge),
            edge_error_bound(ns, a * b))
    for p_e in (0.005, 0.01, 0.05):
        for L in (5, 10):
            res = simulate_tree_errors(p_e, L, trials, config.seed)
            add("tree", {"p_e": p_e, "L": L}, res["deepest"], res["deepest_se"], tree_error_bound(p_e, L))
    for p_j in (0.1, 0.2, 0.3, 0.4):
        for n_tree in (1, 11, 31, 51, 111):
            res = simulate_vote_errors(p_j, n_tree, trials, config.seed)
            add("vote", {"p_j": p_j, "n_tree": n_tree}, res["error"], res["se"], voting_error_bound(p_j, n_tree))
    grid = edge_error_grid()
    frac = float(np.nanmean(grid["p_e"] < 0.05))
    summary = {"mode": "bounds", "config": config.to_dict(),
               "violations": sum(r["violates"] for r in rows),
               "edge_grid_fraction_below_0.05": frac}
    return rows, summary


# ------------------------------------------------------------------ timing


def postprocess_time(n_qubits: int, n_tree: int, seed: int, repeats: int = 3) -> dict:
    """Best-of-``repeats`` wall time (s) of forest generation and voting on exact data."""
    state = random_state(n_qubits, seed, 0)
    probs = exact_hrf_probs(state)
    best = {"forest": np.inf, "voting": np.inf, "total": np.inf}
    for r in range(repeats):
        t0 = time.perf_counter()
        forest = generate_forest(HypercubeGraph(n_qubits), n_tree, seed + r)
        t1 = time.perf_counter()
        signs = majority_vote(forest_signs(EdgeSignOracle(probs[0], probs[1:]), forest))
        RealState.from_amplitudes(signs * np.sqrt(probs[0]))
        t2 = time.perf_counter()
        best["forest"] = min(best["forest"], t1 - t0)
        best["voting"] = min(best["voting"], t2 - t1)
        best["total"] = min(best["total"], t2 - t0)
    return best


def scaling_slope(qubits: Sequence[int], seconds: Sequence[float]) -> float:
    """Least-squares slope of ``log2(seconds)`` against qubit count."""
    return float(np.polyfit(np.asarray(qubits, float), np.log2(np.asarray(seconds, float)), 1)[0])


def run_bench(config: ExperimentConfig) -> tuple[list[dict], dict]:
    config.validate()
    n_tree = 111 if config.n_tree is None else config.n_tree
    rows = []
    for n in config.bench_qubits:
        state = random_state(n, config.seed, 0)
        t0 = time.perf_counter()
        sample_hrf(state, config.n_samp, config.seed)
        t_samp = time.perf_counter() - t0
        post = postprocess_time(n, n_tree, config.seed, config.bench_repeats)
        row = {"n_qubits": n, "hrf_settings": n + 1, "fqst_settings": 3**n, "n_tree": n_tree,
               "timing_ms": {"sampling": 1e3 * t_samp, "forest": 1e3 * post["forest"],
                             "voting": 1e3 * post["voting"], "postprocess": 1e3 * post["total"]}}
        if n <= config.max_fqst_qubits:
            t0 = time.perf_counter()
            tables = fq.measure_all(state, config.n_samp, seed=config.seed)
            t1 = time.perf_counter()
            fq.project_physical(fq.linear_inversion(tables, n))
            t2 = time.perf_counter()
            row["timing_ms"]["fqst_sampling"] = 1e3 * (t1 - t0)
            row["timing_ms"]["fqst_inversion"] = 1e3 * (t2 - t1)
        rows.append(row)
    fit = [r for r in rows if r["n_qubits"] >= 6]
    summary = {"mode": "bench", "config": config.to_dict()}
    if len(fit) >= 2:
        summary["postprocess_log2_slope"] = scaling_slope(
            [r["n_qubits"] for r in fit], [r["timing_ms"]["postprocess"] for r in fit]
        )
    return rows, summary


RUNNERS = {"hrf": run_hrf, "fqst": run_fqst, "props": run_props, "bounds": run_bounds, "bench": run_bench}
