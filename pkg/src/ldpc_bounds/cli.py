"""Command-line front end.

Every run writes a JSON manifest (next to ``--out`` as ``<out>.manifest.json``,
or to stderr when writing to stdout) that ``--from-manifest`` can replay.
Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from importlib.metadata import PackageNotFoundError, version as _pkg_version

from . import bounds, density, simulator, tree_oracle
from .channels import ChannelError, bhattacharyya, parse_channel, uncoded_error_prob
from .ensembles import EnsembleError, parse_ensemble

CHANNEL_HELP = (
    "channel spec: bec:EPS, bsc:P or biawgn:SIGMA (noise std, unit-energy +/-1 "
    "signalling; Eb/N0[dB] = -20 log10(SIGMA) - 10 log10(2 R))"
)


class UsageError(Exception):
    pass


def _tool_version() -> str:
    try:
        return _pkg_version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _ensemble(args):
    if not args.ensemble:
        raise UsageError("--ensemble is required")
    return parse_ensemble(args.ensemble)


def _channel(args):
    if not args.channel:
        raise UsageError("--channel is required")
    return parse_channel(args.channel)


def _quant(args):
    try:
        return density.QuantizationParams(args.delta, args.mmax)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def cmd_bounds(args) -> str:
    ens, ch = _ensemble(args), _channel(args)
    L = args.iters
    trajs = [
        bounds.ms_upper_bound(ens, bhattacharyya(ch), L, root_inclusive=args.root_inclusive),
        bounds.sp_lower_bound(ens, uncoded_error_prob(ch), L),
    ]
    if ch.kind == "bec":
        trajs.append(bounds.bec_de(ens, ch.parameter, L))
    return bounds.trajectories_to_csv(trajs)


def cmd_threshold(args) -> str:
    ens = _ensemble(args)
    if args.mode == "bhattacharyya":
        res = bounds.bhattacharyya_threshold_result(ens, args.tol, root_inclusive=args.root_inclusive)
    elif args.mode == "bec":
        res = bounds.bec_threshold_result(ens, args.tol)
    else:
        ch = _channel(args)
        res = density.channel_threshold(ens, ch.kind, args.tol, args.iters, _quant(args))
    out = res.as_dict()
    out["ensemble"] = ens.name
    out["tol"] = args.tol
    return json.dumps(out, indent=2) + "\n"


def cmd_de(args) -> str:
    ens, ch = _ensemble(args), _channel(args)
    res = density.run_de_full(ens, ch, args.iters, _quant(args))
    rows = [
        (l, float(e), float(v), str(ch))
        for l, (e, v) in enumerate(zip(res.edge.values, res.node.values))
    ]
    return _csv(["iteration", "edge_error_prob", "node_error_prob", "channel"], rows)


def cmd_simulate(args) -> str:
    ens, ch = _ensemble(args), _channel(args)
    decoders = ["SP", "MS"] if args.decoder == "both" else [args.decoder]
    cfg = simulator.SimulationConfig(
        ensemble=ens, channel=ch, n=args.n, trials=args.trials, max_iter=args.iters,
        master_seed=args.seed, target_error_events=args.target_errors, early_stop=args.early_stop,
    )
    parts = []
    for i, dec in enumerate(decoders):
        res = simulator.monte_carlo(cfg, dec, threads=args.threads)
        text = res.to_csv(str(ch), args.seed)
        parts.append(text if i == 0 else text.split("\n", 1)[1])
    return "".join(parts)


def cmd_tree_oracle(args) -> str:
    ch = _channel(args)
    rec = tree_oracle.oracle_record(
        args.dv, args.dc, args.levels, ch, node_perspective=args.node_perspective,
        workers=args.threads or 1,
    )
    return json.dumps(rec, indent=2) + "\n"


def cmd_enumerate(args) -> str:
    ens = _ensemble(args)
    std = bounds.weight_enumerator(ens, args.levels, args.max_weight, root_inclusive=False)
    incl = bounds.weight_enumerator(ens, args.levels, args.max_weight, root_inclusive=True)
    weights = sorted(set(std.nonzero()) | set(incl.nonzero()))
    rows = [(w, float(std.coeffs[w]), float(incl.coeffs[w])) for w in weights]
    text = _csv(["weight", "standard", "root_inclusive"], rows)
    if std.truncated or incl.truncated:
        print("warning: enumerator truncated at max weight", args.max_weight, file=sys.stderr)
    return text


COMMANDS = {
    "bounds": cmd_bounds,
    "threshold": cmd_threshold,
    "de": cmd_de,
    "simulate": cmd_simulate,
    "tree-oracle": cmd_tree_oracle,
    "enumerate": cmd_enumerate,
}


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ensemble", metavar="FILE", help="ensemble JSON file or regular:DV,DC")
    common.add_argument("--channel", metavar="SPEC", help=CHANNEL_HELP)
    common.add_argument("--iters", type=int, default=50, metavar="N", help="iterations (default 50)")
    common.add_argument("--seed", type=_u64, default=0, metavar="U64")
    common.add_argument("--trials", type=int, default=100, metavar="N")
    common.add_argument("--n", type=int, default=20000, metavar="N", help="code length for simulation")
    common.add_argument("--tol", type=_positive, default=1e-4, metavar="X")
    common.add_argument("--delta", type=_positive, default=0.02, metavar="X", help="LLR grid spacing")
    common.add_argument("--mmax", type=_positive, default=40.0, metavar="X", help="LLR grid half-range")
    common.add_argument("--root-inclusive", action="store_true",
                        help="count the root bit's weight in the union-bound recursion")
    common.add_argument("--threads", type=int, default=None, metavar="N",
                        help="worker threads (default: all cores)")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--manifest", metavar="PATH", help="manifest path (default: <out>.manifest.json)")

    p = argparse.ArgumentParser(prog="ldpc-bounds", description=__doc__.splitlines()[0])
    p.add_argument("--from-manifest", metavar="PATH", help="replay a previous run")
    # replay outputs; the subcommand-level flags cover normal runs
    p.add_argument("--out", dest="replay_out", metavar="PATH", help="with --from-manifest: output file")
    p.add_argument("--manifest", dest="replay_manifest", metavar="PATH", help=argparse.SUPPRESS)
    p.add_argument("--threads", dest="replay_threads", type=int, metavar="N", help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command")

    sub.add_parser("bounds", parents=[common], help="upper/lower bound trajectories (CSV)")
    t = sub.add_parser("threshold", parents=[common], help="threshold by bisection (JSON)")
    t.add_argument("--mode", choices=["bhattacharyya", "bec", "de-channel"], default="bhattacharyya")
    sub.add_parser("de", parents=[common], help="quantized density evolution (CSV)")
    s = sub.add_parser("simulate", parents=[common], help="finite-length Monte Carlo (CSV)")
    s.add_argument("--decoder", choices=["SP", "MS", "both"], default="SP")
    s.add_argument("--target-errors", type=int, default=None, metavar="N",
                   help="stop once this many final-iteration bit errors are seen")
    s.add_argument("--early-stop", action="store_true", help="freeze decisions once the syndrome is zero")
    o = sub.add_parser("tree-oracle", parents=[common], help="exhaustive tree-code check (JSON)")
    o.add_argument("--dv", type=int, required=True)
    o.add_argument("--dc", type=int, required=True)
    o.add_argument("--levels", type=int, required=True)
    o.add_argument("--node-perspective", action="store_true", help="root has d_v child checks")
    e = sub.add_parser("enumerate", parents=[common], help="reduced-codebook weight enumerators (CSV)")
    e.add_argument("--levels", type=int, default=1)
    e.add_argument("--max-weight", type=int, default=512)
    return p


_NOT_PARAMS = {"command", "out", "manifest", "from_manifest", "threads",
               "replay_out", "replay_manifest", "replay_threads"}


def _manifest(args) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in _NOT_PARAMS}
    return {
        "subcommand": args.command,
        "params": params,
        "threads": args.threads,
        "version": _tool_version(),
        "master_seed": args.seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def _replay_args(parser, args):
    try:
        with open(args.from_manifest) as fh:
            man = json.load(fh)
        cmd = man["subcommand"]
        params = man["params"]
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot read manifest {args.from_manifest}: {e}") from None
    if cmd not in COMMANDS:
        raise UsageError(f"manifest names unknown subcommand {cmd!r}")
    base = parser.parse_args([cmd, *_required_stub(cmd)])
    for k, v in params.items():
        setattr(base, k, v)
    base.command = cmd
    base.threads = args.replay_threads if args.replay_threads is not None else man.get("threads")
    base.out = args.replay_out
    base.manifest = args.replay_manifest
    base.from_manifest = args.from_manifest
    return base


def _required_stub(cmd):
    # placeholders for required flags; overwritten from the manifest
    return ["--dv", "0", "--dc", "0", "--levels", "0"] if cmd == "tree-oracle" else []


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.from_manifest:
            if args.command is not None:
                raise UsageError("--from-manifest takes no subcommand")
            args = _replay_args(parser, args)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        text = COMMANDS[args.command](args)
    except (UsageError, EnsembleError, ChannelError, tree_oracle.OracleSizeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # numeric or runtime failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1

    man = json.dumps(_manifest(args), indent=2, default=str)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        with open(args.manifest or args.out + ".manifest.json", "w") as fh:
            fh.write(man + "\n")
    else:
        sys.stdout.write(text)
        if args.manifest:
            with open(args.manifest, "w") as fh:
                fh.write(man + "\n")
        else:
            print(man, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
