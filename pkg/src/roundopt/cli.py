"""Command-line front end: inspect patches, emit circuits, run sweeps.

One executable with subcommands; every run is reproducible from its
flags plus a seed, and file outputs are byte-identical across repeats
regardless of worker count.  A JSON config file can hold any flag
(keys named like the long flags); explicit flags win over the file.

Durations accept absolute values with units (ns, us, ms, s), plain
numbers in consistent units, or multiples of the total idle time like
"2T".
"""

from __future__ import annotations

import argparse
import json
import sys

from .analytic import (
    AnalyticParams,
    feasible_rounds,
    n_star_basis,
    n_star_combined,
)
from .circuit import ExperimentConfig, build_memory_circuit
from .decoder import build_graphs, fault_distance
from .estimator import (
    heatmap_csv,
    heatmap_sweep,
    metadata_json,
    sweep_csv,
    sweep_rounds,
)
from .frame import compile_signatures, propagate_frame
from .layout import build_patch
from .noise import NoiseParams

_UNITS = (("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3), ("s", 1.0))


def parse_time(value, t_ref: float | None = None) -> float:
    """Duration from a number, a unit suffix, or a multiple of T."""
    if isinstance(value, (int, float)):
        return float(value)
    text = value.strip()
    if text.endswith("T"):
        if t_ref is None:
            raise ValueError(f"{text!r} is relative but no T reference is set")
        return float(text[:-1] or "1") * t_ref
    for suffix, scale in _UNITS:  # ns/us/ms before the bare s
        if text.endswith(suffix):
            return float(text[: -len(suffix)]) * scale
    return float(text)


def parse_rounds(text) -> list[int]:
    """Round counts from "n", "min:max", or "min:max:step" (inclusive)."""
    if isinstance(text, int):
        return [text]
    parts = str(text).split(":")
    if len(parts) == 1:
        return [int(parts[0])]
    if len(parts) not in (2, 3):
        raise ValueError(f"bad rounds spec {text!r}, want min:max:step")
    lo, hi = int(parts[0]), int(parts[1])
    step = int(parts[2]) if len(parts) == 3 else 1
    if lo < 1 or hi < lo or step < 1:
        raise ValueError(f"bad rounds spec {text!r}")
    return list(range(lo, hi + 1, step))


def _add_noise_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--t", default=None, help="total idle time (default 1.0)")
    sub.add_argument("--t1", default=None, help="relaxation time (default 2T)")
    sub.add_argument("--tphi", default=None, help="pure dephasing time (default 12T)")
    sub.add_argument("--p", default=None, type=float, help="gate depolarizing strength")
    sub.add_argument("--q", default=None, type=float, help="readout flip probability")


_NOISE_DEFAULTS = {"t": 1.0, "t1": "2T", "tphi": "12T", "p": 0.006, "q": 0.02}


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags."""
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _resolve_noise(merged: dict) -> tuple[float, NoiseParams]:
    t_total = parse_time(merged["t"])
    noise = NoiseParams(
        t1=parse_time(merged["t1"], t_total),
        tphi=parse_time(merged["tphi"], t_total),
        p=float(merged["p"]),
        q=float(merged["q"]),
    )
    return t_total, noise


def _noise_dict(t_total: float, noise: NoiseParams) -> dict:
    return {"t": t_total, "t1": noise.t1, "tphi": noise.tphi, "p": noise.p, "q": noise.q}


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _sidecar_path(out: str) -> str:
    return (out[: -len(".csv")] if out.endswith(".csv") else out) + ".meta.json"


def _cmd_layout(args: argparse.Namespace) -> int:
    patch = build_patch(args.d, schedule=args.schedule)
    _write_text(args.out, patch.describe())
    return 0


def _cmd_emit_circuit(args: argparse.Namespace) -> int:
    merged = _merge(args, _NOISE_DEFAULTS)
    t_total, noise = _resolve_noise(merged)
    config = ExperimentConfig(
        d=args.d,
        rounds=args.rounds,
        t_total=t_total,
        noise=noise,
        schedule=args.schedule,
    )
    _write_text(args.out, build_memory_circuit(config).to_text())
    return 0


def _cmd_emit_graph(args: argparse.Namespace) -> int:
    merged = _merge(args, _NOISE_DEFAULTS)
    t_total, noise = _resolve_noise(merged)
    config = ExperimentConfig(
        d=args.d,
        rounds=args.rounds,
        t_total=t_total,
        noise=noise,
        schedule=args.schedule,
    )
    lines = ["family,u,v,probability,weight,obs_mask"]
    for graph in build_graphs(build_memory_circuit(config)):
        for u, v, prob, weight, obs in graph.edge_rows():
            lines.append(
                "%s,%d,%d,%.12g,%.12g,%d" % (graph.family, u, v, prob, weight, obs)
            )
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    defaults = dict(
        _NOISE_DEFAULTS, d=None, rounds=None, shots=10000, seed=0, workers=1
    )
    merged = _merge(args, defaults)
    if merged["d"] is None or merged["rounds"] is None:
        raise ValueError("sweep needs --d and --rounds")
    t_total, noise = _resolve_noise(merged)
    n_list = parse_rounds(merged["rounds"])
    result = sweep_rounds(
        d=int(merged["d"]),
        t_total=t_total,
        noise=noise,
        n_list=n_list,
        shots=int(merged["shots"]),
        seed=int(merged["seed"]),
        schedule=args.schedule,
        workers=int(merged["workers"]),
    )
    _write_text(args.out, sweep_csv(result))
    config = {
        "subcommand": "sweep",
        "d": int(merged["d"]),
        "rounds": n_list,
        "schedule": args.schedule,
        "shots": int(merged["shots"]),
        **_noise_dict(t_total, noise),
    }
    if args.out is not None:
        _write_text(_sidecar_path(args.out), metadata_json(config, int(merged["seed"])))
    print(
        "optimal rounds %d, interval [%d, %d], pL %.5g +- %.3g"
        % (
            result.argmin_rounds,
            result.interval_lo,
            result.interval_hi,
            result.min_estimate.pL,
            result.min_estimate.dpL,
        )
    )
    return 0


def _parse_axis(spec: str, t_total: float) -> tuple[str, list[float]]:
    name, _, tail = spec.partition("=")
    name = name.strip()
    if name not in ("t1", "tphi", "p", "q") or not tail:
        raise ValueError(f"bad axis spec {spec!r}, want e.g. t1=1T,3T")
    raw = [v.strip() for v in tail.split(",") if v.strip()]
    if name in ("t1", "tphi"):
        values = [parse_time(v, t_total) for v in raw]
    else:
        values = [float(v) for v in raw]
    return name, values


def _cmd_heatmap(args: argparse.Namespace) -> int:
    defaults = dict(
        _NOISE_DEFAULTS, d=None, rounds=None, shots=10000, seed=0, workers=1
    )
    merged = _merge(args, defaults)
    if merged["d"] is None or merged["rounds"] is None:
        raise ValueError("heatmap needs --d and --rounds")
    t_total, noise = _resolve_noise(merged)
    param_a, values_a = _parse_axis(args.axis1, t_total)
    param_b, values_b = _parse_axis(args.axis2, t_total)
    n_list = parse_rounds(merged["rounds"])
    result = heatmap_sweep(
        d=int(merged["d"]),
        t_total=t_total,
        base_noise=noise,
        param_a=param_a,
        values_a=values_a,
        param_b=param_b,
        values_b=values_b,
        n_list=n_list,
        shots=int(merged["shots"]),
        seed=int(merged["seed"]),
        schedule=args.schedule,
        workers=int(merged["workers"]),
    )
    _write_text(args.out, heatmap_csv(result))
    config = {
        "subcommand": "heatmap",
        "d": int(merged["d"]),
        "rounds": n_list,
        "schedule": args.schedule,
        "shots": int(merged["shots"]),
        "axis1": {"param": param_a, "values": values_a},
        "axis2": {"param": param_b, "values": values_b},
        **_noise_dict(t_total, noise),
    }
    if args.out is not None:
        _write_text(_sidecar_path(args.out), metadata_json(config, int(merged["seed"])))
    for cell in result.cells:
        print(
            "%s=%g %s=%g: optimal rounds %d, interval [%d, %d]"
            % (
                param_a,
                cell.value_a,
                param_b,
                cell.value_b,
                cell.sweep.argmin_rounds,
                cell.sweep.interval_lo,
                cell.sweep.interval_hi,
            )
        )
    return 0


def _read_interval_from_csv(path: str) -> tuple[int, int, int]:
    """(argmin N, lo, hi) recovered from a sweep CSV's flag column."""
    flagged: list[tuple[int, float]] = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        col = {name: i for i, name in enumerate(header)}
        for line in fh:
            row = line.strip().split(",")
            if row == [""]:
                continue
            if int(row[col["in_optimal_interval"]]):
                flagged.append((int(row[col["N"]]), float(row[col["pL"]])))
    if not flagged:
        raise ValueError(f"no optimal-interval rows in {path}")
    best = min(flagged, key=lambda t: t[1])[0]
    return best, flagged[0][0], flagged[-1][0]


def _cmd_analytic(args: argparse.Namespace) -> int:
    merged = _merge(args, _NOISE_DEFAULTS)
    t_total, noise = _resolve_noise(merged)
    if args.sweep is not None:
        with open(_sidecar_path(args.sweep)) as fh:
            meta = json.load(fh)
        cfg = meta["config"]
        params = AnalyticParams.from_noise(
            d=int(cfg["d"]),
            t_total=float(cfg["t"]),
            noise=NoiseParams(
                t1=float(cfg["t1"]),
                tphi=float(cfg["tphi"]),
                p=float(cfg["p"]),
                q=float(cfg["q"]),
            ),
        )
        argmin_n, lo, hi = _read_interval_from_csv(args.sweep)
        lines = [
            "d,n_star_x,n_star_z,n_star_combined,empirical_argmin,"
            "empirical_lo,empirical_hi",
            "%d,%.12g,%.12g,%d,%d,%d,%d"
            % (
                params.d,
                n_star_basis(params, "x"),
                n_star_basis(params, "z"),
                n_star_combined(params),
                argmin_n,
                lo,
                hi,
            ),
        ]
        _write_text(args.out, "\n".join(lines) + "\n")
        return 0
    d_list = [int(v) for v in str(args.d).split(",")]
    lines = ["d,n_star_x,n_star_z,n_star_combined"]
    for d in d_list:
        params = AnalyticParams.from_noise(d=d, t_total=t_total, noise=noise)
        lines.append(
            "%d,%.12g,%.12g,%d"
            % (
                d,
                n_star_basis(params, "x"),
                n_star_basis(params, "z"),
                n_star_combined(params),
            )
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    if args.cycle_time is not None:
        cycle = parse_time(args.cycle_time, t_total)
        print("feasible rounds: %d" % feasible_rounds(t_total, cycle))
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    # Probe noise only materializes every mechanism kind; the checks
    # themselves are geometric and independent of the magnitudes.
    config = ExperimentConfig(
        d=args.d,
        rounds=args.rounds,
        t_total=0.1,
        noise=NoiseParams(t1=1.0, tphi=1.0, p=0.01, q=0.01),
        schedule=args.schedule,
    )
    circuit = build_memory_circuit(config)
    dets, ez, ex = propagate_frame(circuit, {})
    if dets.any() or ez != 0 or ex != 0:
        print("deterministic check FAILED: fault-free run fired a detector")
        return 1
    print("deterministic check passed: fault-free run is silent")
    compiled = compile_signatures(circuit)
    status = 0
    for basis in ("x", "y", "z"):
        dist = fault_distance(compiled, basis, max_weight=args.d + 1)
        print(f"fault distance = {dist} (basis {basis})")
        if dist != args.d:
            status = 1
    if status:
        print(f"validation FAILED: expected fault distance {args.d} in every basis")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roundopt",
        description="Optimize the stabilizer-round count of an idling "
        "surface-code patch under relaxation, dephasing, gate and "
        "readout noise.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(s: argparse.ArgumentParser, rounds_int: bool = True) -> None:
        s.add_argument("--d", type=int, required=True, help="code distance")
        if rounds_int:
            s.add_argument("--rounds", type=int, required=True)
        s.add_argument("--schedule", choices=("standard", "swapped"), default="standard")
        s.add_argument("--out", default=None, help="output path (default stdout)")

    s = sub.add_parser("layout", help="describe the patch geometry")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--schedule", choices=("standard", "swapped"), default="standard")
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_layout)

    s = sub.add_parser("emit-circuit", help="print the memory experiment circuit")
    common(s)
    _add_noise_flags(s)
    s.add_argument("--config", default=None, help="JSON config file")
    s.set_defaults(func=_cmd_emit_circuit)

    s = sub.add_parser("emit-graph", help="print the decoding graph edges")
    common(s)
    _add_noise_flags(s)
    s.add_argument("--config", default=None)
    s.set_defaults(func=_cmd_emit_graph)

    s = sub.add_parser("sweep", help="Monte Carlo sweep over round counts")
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--rounds", default=None, help="N or min:max:step")
    s.add_argument("--schedule", choices=("standard", "swapped"), default="standard")
    s.add_argument("--out", default=None)
    _add_noise_flags(s)
    s.add_argument("--shots", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--config", default=None)
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("heatmap", help="sweeps over a 2-D noise grid")
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--rounds", default=None, help="N or min:max:step")
    s.add_argument("--schedule", choices=("standard", "swapped"), default="standard")
    s.add_argument("--out", default=None)
    _add_noise_flags(s)
    s.add_argument("--shots", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--axis1", required=True, help="grid axis, e.g. t1=1T,3T")
    s.add_argument("--axis2", required=True, help="grid axis, e.g. p=0.004,0.008")
    s.add_argument("--config", default=None)
    s.set_defaults(func=_cmd_heatmap)

    s = sub.add_parser("analytic", help="closed-form optima table")
    s.add_argument("--d", default="3,5,7,9", help="distance or comma list")
    _add_noise_flags(s)
    s.add_argument("--cycle-time", default=None, help="report feasible rounds")
    s.add_argument("--sweep", default=None, help="sweep CSV to compare against")
    s.add_argument("--out", default=None)
    s.add_argument("--config", default=None)
    s.set_defaults(func=_cmd_analytic)

    s = sub.add_parser("validate", help="fault-distance and determinism checks")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--rounds", type=int, required=True)
    s.add_argument("--schedule", choices=("standard", "swapped"), default="standard")
    s.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
