"""Monte Carlo estimation of the logical Pauli channel over round sweeps.

A memory experiment in basis P fails when the corrected logical readout
is flipped, which happens for either of the two anticommuting logical
Paulis; the three per-basis failure rates therefore determine the full
logical channel by a linear inversion, including the total rate pL and
its binomial uncertainty.  Sweeps run the experiment per candidate round
count and locate the interval of counts indistinguishable from the
sampled minimum.

Randomness is organized so results never depend on scheduling: every
(parameter cell, basis) pair owns an independent counter-based stream
derived from the global seed, and shots are simulated in fixed blocks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .circuit import ExperimentConfig, build_memory_circuit
from .decoder import MatchingGraph, build_graphs, decode_batch
from .frame import CompiledCircuit, compile_signatures, iter_shot_blocks, shot_key
from .noise import NoiseParams

BASES = ("x", "y", "z")

# Conventions recorded in every output sidecar; they resolve points the
# estimator had to pin down beyond the failure-rate definitions.
DESIGN_FLAGS = {
    "interval_rule": "contiguous sampled range through argmin with "
    "pL <= pL(argmin) + dpL(argmin)",
    "negative_rates": "inverted channel rates reported unclamped",
    "edge_merge": "parallel fault components xor-merged per endpoint pair",
    "path_ties": "boundary route preferred at equal weight; even "
    "observable parity preferred among equal-weight paths",
    "idle_split": "total idle time divided evenly across the noisy rounds",
    "uncertainty": "dpL is the sum of the three binomial standard errors "
    "divided by two",
}


@dataclass(frozen=True)
class LogicalEstimate:
    """Per-basis failure rates and the inverted logical Pauli channel."""

    fail_x: float
    fail_y: float
    fail_z: float
    pxL: float
    pyL: float
    pzL: float
    pL: float
    dpL: float
    shots: int

    @property
    def negative_rates(self) -> bool:
        """True when sampling noise drove an inverted rate below zero."""
        return min(self.pxL, self.pyL, self.pzL) < 0.0


def invert_channel(
    fail_x: float, fail_y: float, fail_z: float, shots: int
) -> LogicalEstimate:
    """Logical Pauli channel implied by the three failure rates.

    Each failure rate counts two of the three logical error types, so
    the map is linear: pxL = (fail_y + fail_z - fail_x)/2 and cyclic,
    pL = (fail_x + fail_y + fail_z)/2.  Sampling noise can push a rate
    negative; it is reported as-is (clamping would bias pL) and flagged
    via LogicalEstimate.negative_rates.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    for name, f in (("fail_x", fail_x), ("fail_y", fail_y), ("fail_z", fail_z)):
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"{name} must be a probability, got {f}")
    pxL = 0.5 * (fail_y + fail_z - fail_x)
    pyL = 0.5 * (fail_x + fail_z - fail_y)
    pzL = 0.5 * (fail_x + fail_y - fail_z)
    pL = 0.5 * (fail_x + fail_y + fail_z)
    dpL = sum(
        math.sqrt(f * (1.0 - f) / (4.0 * shots))
        for f in (fail_x, fail_y, fail_z)
    )
    return LogicalEstimate(
        fail_x=fail_x,
        fail_y=fail_y,
        fail_z=fail_z,
        pxL=pxL,
        pyL=pyL,
        pzL=pzL,
        pL=pL,
        dpL=dpL,
        shots=shots,
    )


@dataclass(frozen=True)
class PreparedExperiment:
    """Compiled circuit plus its matching graphs, reusable across bases."""

    compiled: CompiledCircuit
    x_graph: MatchingGraph
    z_graph: MatchingGraph

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "PreparedExperiment":
        compiled = compile_signatures(build_memory_circuit(config))
        x_graph, z_graph = build_graphs(compiled)
        return cls(compiled=compiled, x_graph=x_graph, z_graph=z_graph)


def run_basis(
    experiment: ExperimentConfig | PreparedExperiment,
    basis: str,
    shots: int,
    seed: int = 0,
    cell_index: int = 0,
) -> float:
    """Failure rate of one memory experiment basis.

    A shot fails when the decoder's predicted readout flip differs from
    the actual one.  The random stream is fixed by (seed, cell_index,
    basis), so the same arguments always reproduce the same shots.
    """
    if basis not in BASES:
        raise ValueError(f"basis must be one of {BASES}, got {basis!r}")
    if shots <= 0:
        raise ValueError("shots must be positive")
    prep = (
        experiment
        if isinstance(experiment, PreparedExperiment)
        else PreparedExperiment.from_config(experiment)
    )
    key = shot_key(seed, cell_index, BASES.index(basis))
    fails = 0
    for bits, obs in iter_shot_blocks(prep.compiled, key, shots):
        if basis == "x":
            pred = decode_batch(prep.x_graph, bits)
            actual = (obs >> 1) & 1
        elif basis == "z":
            pred = decode_batch(prep.z_graph, bits)
            actual = obs & 1
        else:
            pred = decode_batch(prep.x_graph, bits) ^ decode_batch(
                prep.z_graph, bits
            )
            actual = (obs & 1) ^ ((obs >> 1) & 1)
        fails += int(np.count_nonzero(pred != actual))
    return fails / shots


def estimate_cell(
    experiment: ExperimentConfig | PreparedExperiment,
    shots: int,
    seed: int = 0,
    cell_index: int = 0,
) -> LogicalEstimate:
    """All three bases of one parameter cell, inverted into the channel."""
    prep = (
        experiment
        if isinstance(experiment, PreparedExperiment)
        else PreparedExperiment.from_config(experiment)
    )
    fails = {
        basis: run_basis(prep, basis, shots, seed=seed, cell_index=cell_index)
        for basis in BASES
    }
    return invert_channel(fails["x"], fails["y"], fails["z"], shots)


@dataclass(frozen=True)
class SweepPoint:
    rounds: int
    estimate: LogicalEstimate


@dataclass(frozen=True)
class SweepResult:
    """Channel estimates over a round-count list plus the optimal interval."""

    points: tuple[SweepPoint, ...]
    argmin_rounds: int
    interval_lo: int
    interval_hi: int

    @property
    def min_estimate(self) -> LogicalEstimate:
        for pt in self.points:
            if pt.rounds == self.argmin_rounds:
                return pt.estimate
        raise LookupError("argmin_rounds missing from points")

    def in_interval(self, rounds: int) -> bool:
        return self.interval_lo <= rounds <= self.interval_hi


def locate_interval(n_list, pl_values, dpl_values) -> tuple[int, int, int]:
    """(argmin N, interval lo, interval hi) under the band rule.

    The interval is the maximal contiguous run of sampled N containing
    the argmin whose pL stays within dpL(argmin) above the minimum.
    """
    if len(n_list) == 0:
        raise ValueError("empty sweep")
    k = int(np.argmin(pl_values))
    band = pl_values[k] + dpl_values[k]
    lo = k
    while lo > 0 and pl_values[lo - 1] <= band:
        lo -= 1
    hi = k
    while hi < len(n_list) - 1 and pl_values[hi + 1] <= band:
        hi += 1
    return n_list[k], n_list[lo], n_list[hi]


def _sweep_result(n_list, estimates) -> SweepResult:
    argmin_n, lo, hi = locate_interval(
        list(n_list),
        [e.pL for e in estimates],
        [e.dpL for e in estimates],
    )
    points = tuple(
        SweepPoint(rounds=n, estimate=e) for n, e in zip(n_list, estimates)
    )
    return SweepResult(
        points=points, argmin_rounds=argmin_n, interval_lo=lo, interval_hi=hi
    )


def _cell_job(args):
    d, rounds, t_total, noise, schedule, shots, seed, cell_index = args
    config = ExperimentConfig(
        d=d, rounds=rounds, t_total=t_total, noise=noise, schedule=schedule
    )
    prep = PreparedExperiment.from_config(config)
    fails = tuple(
        run_basis(prep, basis, shots, seed=seed, cell_index=cell_index)
        for basis in BASES
    )
    return cell_index, fails


def _run_cells(jobs, workers: int):
    """Evaluate cell jobs, serially or over a process pool.

    Results are keyed by cell index, so the outcome is identical for any
    worker count; each job re-derives everything it needs from its own
    arguments, so jobs can move between processes freely.
    """
    results = {}
    if workers <= 1:
        for args in jobs:
            idx, fails = _cell_job(args)
            results[idx] = fails
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for idx, fails in pool.map(_cell_job, jobs, chunksize=1):
            results[idx] = fails
    return results


def sweep_rounds(
    d: int,
    t_total: float,
    noise: NoiseParams,
    n_list,
    shots: int,
    seed: int = 0,
    schedule: str = "standard",
    workers: int = 1,
    cell_base: int = 0,
) -> SweepResult:
    """Estimate the channel at every round count in ascending n_list.

    cell_base offsets the cell indices feeding the random streams; it
    lets a caller embed several sweeps in one seeded experiment without
    stream collisions (the heatmap does).
    """
    n_list = list(n_list)
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be nonempty and strictly ascending")
    jobs = [
        (d, n, t_total, noise, schedule, shots, seed, cell_base + i)
        for i, n in enumerate(n_list)
    ]
    results = _run_cells(jobs, workers)
    estimates = [
        invert_channel(*results[cell_base + i], shots)
        for i in range(len(n_list))
    ]
    return _sweep_result(n_list, estimates)


@dataclass(frozen=True)
class HeatmapCell:
    value_a: float
    value_b: float
    sweep: SweepResult


@dataclass(frozen=True)
class HeatmapResult:
    param_a: str
    param_b: str
    cells: tuple[HeatmapCell, ...]  # row-major over (values_a, values_b)


def heatmap_sweep(
    d: int,
    t_total: float,
    base_noise: NoiseParams,
    param_a: str,
    values_a,
    param_b: str,
    values_b,
    n_list,
    shots: int,
    seed: int = 0,
    schedule: str = "standard",
    workers: int = 1,
) -> HeatmapResult:
    """Round sweeps over a 2-D grid of noise-parameter overrides.

    param_a and param_b name NoiseParams fields (t1, tphi, p, q).  All
    (cell, N) jobs share one pool so the grid parallelizes evenly; cell
    indices are globally unique across the grid.
    """
    for name in (param_a, param_b):
        if name not in ("t1", "tphi", "p", "q"):
            raise ValueError(f"unknown noise parameter {name!r}")
    if param_a == param_b:
        raise ValueError("heatmap axes must differ")
    values_a = list(values_a)
    values_b = list(values_b)
    n_list = list(n_list)
    if not values_a or not values_b:
        raise ValueError("empty heatmap grid")

    jobs = []
    grid = []
    cell = 0
    for va in values_a:
        for vb in values_b:
            noise = replace(base_noise, **{param_a: va, param_b: vb})
            grid.append((va, vb, cell))
            for n in n_list:
                jobs.append((d, n, t_total, noise, schedule, shots, seed, cell))
                cell += 1
    results = _run_cells(jobs, workers)

    cells = []
    for va, vb, first in grid:
        estimates = [
            invert_channel(*results[first + i], shots)
            for i in range(len(n_list))
        ]
        cells.append(
            HeatmapCell(value_a=va, value_b=vb, sweep=_sweep_result(n_list, estimates))
        )
    return HeatmapResult(param_a=param_a, param_b=param_b, cells=tuple(cells))


def _fmt(x: float) -> str:
    return "%.12g" % x


SWEEP_COLUMNS = (
    "N,shots,fail_x,fail_y,fail_z,pxL,pyL,pzL,pL,dpL,in_optimal_interval"
)


def sweep_csv(result: SweepResult) -> str:
    """Sweep rows in the fixed CSV schema (deterministic formatting)."""
    lines = [SWEEP_COLUMNS]
    for pt in result.points:
        e = pt.estimate
        lines.append(
            ",".join(
                [str(pt.rounds), str(e.shots)]
                + [
                    _fmt(v)
                    for v in (
                        e.fail_x,
                        e.fail_y,
                        e.fail_z,
                        e.pxL,
                        e.pyL,
                        e.pzL,
                        e.pL,
                        e.dpL,
                    )
                ]
                + ["1" if result.in_interval(pt.rounds) else "0"]
            )
        )
    return "\n".join(lines) + "\n"


def heatmap_csv(result: HeatmapResult) -> str:
    """Heatmap rows: the sweep schema prefixed by the two grid columns."""
    lines = [f"{result.param_a},{result.param_b},{SWEEP_COLUMNS}"]
    for cell in result.cells:
        prefix = f"{_fmt(cell.value_a)},{_fmt(cell.value_b)},"
        body = sweep_csv(cell.sweep).splitlines()[1:]
        lines.extend(prefix + row for row in body)
    return "\n".join(lines) + "\n"


def metadata_json(config: dict, seed: int) -> str:
    """Sidecar payload: full config, seed, version and design flags.

    Deliberately omits anything scheduling-dependent (worker counts,
    timestamps, hostnames) so repeated runs stay byte-identical.
    """
    payload = {
        "config": config,
        "seed": seed,
        "version": __version__,
        "design_flags": DESIGN_FLAGS,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
