"""Command-line harness: simulate measurements, estimate demands, benchmark.

Three subcommands cover the experiment loop end to end:

* ``simulate``  - draw ground-truth instances and write measurement CSVs
                  plus a truth sidecar per trial.
* ``estimate``  - run the estimator on one measurement CSV and write the
                  result JSON. Never reads the sidecar unless --exact is
                  given, in which case it runs the exact-cumulant oracle
                  built from it.
* ``benchmark`` - the full pipeline per (trial, sample count): simulate,
                  estimate, score against truth; writes a deterministic
                  report CSV and a separate timing sidecar.

Under a fixed --seed every output except the timing sidecar is
byte-for-byte reproducible; wall-clock numbers are inherently not, which
is why they live in their own file.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path as FsPath

from .cumulants import EmpiricalSource, ExactModel, ExactSource
from .estimator import DpConfig, error_metrics, estimate
from .graph import Network, ObservationPlan, load_network
from .poset import BitVector
from .rng import derive_stream
from .simulator import Instance, make_instance, measure, read_csv, write_csv

TRUTH_SCHEMA = "odtomo.truth/1"
REPORT_COLUMNS = (
    "kind,network,k,n_samples,trial,rel_total_flow_error,"
    "support_precision,support_recall,truncated"
)
DEFAULT_SAMPLES = (1_000, 10_000, 100_000)


def _parse_samples(text: str) -> tuple[int, ...]:
    try:
        counts = tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sample list {text!r}")
    if not counts or any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError("sample counts must be positive")
    if list(counts) != sorted(counts):
        raise argparse.ArgumentTypeError("sample counts must be ascending")
    return counts


def _parse_k_list(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}")
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("k values must be positive")
    return ks


def _load_plan(net: Network, observe: str) -> ObservationPlan:
    if observe == "all":
        return ObservationPlan.all_edges(net)
    with open(observe, "r", encoding="utf-8") as fh:
        edges = [int(tok) for tok in fh.read().split()]
    return ObservationPlan(tuple(edges))


def _dp_config(args) -> DpConfig:
    return DpConfig(
        epsilon=args.epsilon,
        order_cap=args.order_cap,
        threshold_mode=args.mode,
        z=args.z,
    )


def _truth_sidecar(inst: Instance) -> dict:
    quotient = inst.quotient()
    classes = [
        {
            "indicator": str(key),
            "mean": quotient.means[key],
            "paths": list(quotient.classes[key]),
        }
        for key in sorted(quotient.classes, key=BitVector.sort_key)
    ]
    return {
        "schema": TRUTH_SCHEMA,
        "network": inst.network.name,
        "seed": inst.seed,
        "k": len(inst.paths),
        "observed": list(inst.plan.observed),
        "od_pairs": [list(p) for p in inst.od_pairs],
        "paths": [list(p.edges) for p in inst.paths],
        "means": [float(x) for x in inst.means],
        "classes": classes,
        "dropped_paths": list(quotient.dropped_paths),
        "dropped_mass": quotient.dropped_mass,
    }


def _truth_model(sidecar: dict) -> ExactModel:
    if sidecar.get("schema") != TRUTH_SCHEMA:
        raise ValueError(f"not a truth sidecar (schema {sidecar.get('schema')!r})")
    cols = [BitVector.from_string(c["indicator"]) for c in sidecar["classes"]]
    means = [c["mean"] for c in sidecar["classes"]]
    return ExactModel(cols, means)


def cmd_simulate(args) -> int:
    net = load_network(args.network, args.format)
    plan = _load_plan(net, args.observe)
    out_dir = FsPath(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for trial in range(args.trials):
        inst = make_instance(
            net,
            args.k,
            mean_range=(args.mean_lo, args.mean_hi),
            plan=plan,
            seed=derive_stream(args.seed, trial),
        )
        trial_dir = out_dir / f"trial_{trial:03d}"
        trial_dir.mkdir(exist_ok=True)
        sidecar = _truth_sidecar(inst)
        with open(trial_dir / "truth.json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for n in args.samples:
            ms = measure(inst, n)
            write_csv(ms, str(trial_dir / f"measurements_n{n}.csv"))
        print(f"trial {trial}: wrote truth.json + {len(args.samples)} CSVs in {trial_dir}")
    return 0


def cmd_estimate(args) -> int:
    config = _dp_config(args)
    if args.exact:
        if not args.truth:
            print("error: --exact requires --truth sidecar", file=sys.stderr)
            return 2
        with open(args.truth, "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        source = ExactSource(_truth_model(sidecar))
    else:
        samples, _observed = read_csv(args.measurements)
        source = EmpiricalSource(samples, order_cap=args.order_cap)
    result = estimate(source, config)
    doc = result.to_json(indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc)
            fh.write("\n")
    else:
        print(doc)
    status = "truncated" if result.truncated else "complete"
    print(
        f"support size {len(result.support)}, total flow {result.total_mean():.6g} "
        f"({status})",
        file=sys.stderr,
    )
    return 0


def _benchmark_trial(net, args, plan, k, trial):
    """All (n_samples) runs of one (k, trial). Returns stable rows + timings."""
    inst = make_instance(
        net,
        k,
        mean_range=(args.mean_lo, args.mean_hi),
        plan=plan,
        seed=derive_stream(args.seed, k, trial),
    )
    truth = inst.quotient()
    config = _dp_config(args)
    rows = []
    timings = []
    exact_result = None
    for n in args.samples:
        t0 = time.perf_counter()
        if args.exact:
            if exact_result is None:
                exact_result = estimate(ExactSource(truth.to_exact_model()), config)
            result = exact_result
        else:
            ms = measure(inst, n)
            source = EmpiricalSource(ms.samples, order_cap=args.order_cap)
            result = estimate(source, config)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        metrics = error_metrics(truth, result)
        rows.append(
            {
                "network": net.name,
                "k": k,
                "n_samples": n,
                "trial": trial,
                "rel_total_flow_error": metrics.rel_total_flow_error,
                "support_precision": metrics.support_precision,
                "support_recall": metrics.support_recall,
                "truncated": result.truncated,
            }
        )
        timings.append((k, trial, n, elapsed_ms))
    return rows, timings


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_benchmark(args) -> int:
    net = load_network(args.network, args.format)
    plan = _load_plan(net, args.observe)
    jobs = [(k, t) for k in args.k for t in range(args.trials)]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(
                pool.map(lambda kt: _benchmark_trial(net, args, plan, *kt), jobs)
            )
    else:
        results = [_benchmark_trial(net, args, plan, k, t) for k, t in jobs]

    rows = [r for rows, _ in results for r in rows]
    timings = [t for _, ts in results for t in ts]
    rows.sort(key=lambda r: (r["k"], r["trial"], r["n_samples"]))

    lines = [REPORT_COLUMNS]
    for r in rows:
        lines.append(
            f"trial,{r['network']},{r['k']},{r['n_samples']},{r['trial']},"
            f"{_fmt(r['rel_total_flow_error'])},{_fmt(r['support_precision'])},"
            f"{_fmt(r['support_recall'])},{int(r['truncated'])}"
        )
    # one summary block per (k, n): the arithmetic mean and median of the
    # trial rows above, recomputable by any external tool
    for k in args.k:
        for n in args.samples:
            per = [r for r in rows if r["k"] == k and r["n_samples"] == n]
            for kind, agg in (("mean", _mean), ("median", _median)):
                lines.append(
                    f"{kind},{net.name},{k},{n},,"
                    f"{_fmt(agg([r['rel_total_flow_error'] for r in per]))},"
                    f"{_fmt(agg([r['support_precision'] for r in per]))},"
                    f"{_fmt(agg([r['support_recall'] for r in per]))},"
                    f"{int(any(r['truncated'] for r in per))}"
                )
    report = "\n".join(lines) + "\n"
    out = FsPath(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report)

    timing_path = out.with_name(out.stem + "_timings.csv")
    with open(timing_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,trial,n_samples,runtime_ms\n")
        for k, trial, n, ms in sorted(timings):
            fh.write(f"{k},{trial},{n},{ms:.3f}\n")
    print(f"wrote {out} ({len(rows)} rows) and {timing_path}")
    return 0


def _mean(xs):
    return sum(xs) / len(xs)


def _median(xs):
    ys = sorted(xs)
    mid = len(ys) // 2
    return ys[mid] if len(ys) % 2 else (ys[mid - 1] + ys[mid]) / 2


def _add_common(p: argparse.ArgumentParser, with_network: bool) -> None:
    if with_network:
        p.add_argument("--network", required=True, help="network file path")
        p.add_argument("--format", choices=("tntp", "json"), default=None,
                       help="network format (default: by extension)")
        p.add_argument("--observe", default="all",
                       help="'all' or a file of observed edge indices")
        p.add_argument("--samples", type=_parse_samples,
                       default=DEFAULT_SAMPLES,
                       help="comma-separated ascending sample counts")
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mean-lo", type=float, default=1.0,
                       help="lower bound of the demand-rate range")
        p.add_argument("--mean-hi", type=float, default=10.0,
                       help="upper bound of the demand-rate range")
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="absolute acceptance threshold on phi")
    p.add_argument("--order-cap", type=int, default=8,
                   help="maximum cumulant order before truncation")
    p.add_argument("--mode", choices=("statistical", "absolute"),
                   default="statistical", help="threshold mode")
    p.add_argument("--z", type=float, default=3.0,
                   help="z multiplier for the statistical threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odtomo",
        description="Path and demand recovery from aggregate link-flow measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate measurement CSVs + truth sidecars")
    _add_common(p_sim, with_network=True)
    p_sim.add_argument("--k", type=int, required=True, help="active OD pairs")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate demands from a measurement CSV")
    p_est.add_argument("--measurements", help="measurement CSV path")
    p_est.add_argument("--exact", action="store_true",
                       help="run the exact-cumulant oracle from a truth sidecar")
    p_est.add_argument("--truth", help="truth sidecar (required with --exact)")
    p_est.add_argument("--out", help="result JSON path (default: stdout)")
    _add_common(p_est, with_network=False)
    p_est.set_defaults(func=cmd_estimate)

    p_bench = sub.add_parser("benchmark", help="full pipeline + report CSV")
    _add_common(p_bench, with_network=True)
    p_bench.add_argument("--k", type=_parse_k_list, required=True,
                         help="active OD pairs; comma list runs one block per value")
    p_bench.add_argument("--exact", action="store_true",
                         help="score the exact-cumulant oracle instead of samples")
    p_bench.add_argument("--jobs", type=int, default=1,
                         help="worker threads across trials")
    p_bench.add_argument("--out", required=True, help="report CSV path")
    p_bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "estimate":
        if not args.exact and not args.measurements:
            print("error: estimate needs --measurements (or --exact --truth)",
                  file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
