"""Command line entry point: ``ecpsim simulate | sweep | verify``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys

from . import analysis
from .circuits import ProtocolSpec, default_detector_map
from .detection import herald, herald_events, recyclable_mass, success_mass

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x: float) -> str:
    return f"{x:.12g}"


def _parties(args) -> int:
    protocol = args.protocol_pos or args.protocol
    if protocol == "bell":
        if args.parties not in (None, 2):
            raise ValueError("the bell protocol has exactly 2 parties")
        return 2
    default = 3 if protocol == "ghz" else 2
    n = default if args.parties is None else args.parties
    if n < 2:
        raise ValueError("--parties must be at least 2")
    return n


def _check_alpha(alpha: float) -> float:
    if not 0 <= alpha <= 1:
        raise ValueError(f"--alpha must lie in [0, 1], got {alpha}")
    return alpha


def cmd_simulate(args, out) -> int:
    n = _parties(args)
    spec = ProtocolSpec(n, _check_alpha(args.alpha))
    outcomes = herald(spec)
    print(f"parties={n} alpha={_num(spec.alpha)} beta={_num(spec.beta)}", file=out)
    print(f"{'label':<16} {'probability':>16}  {'feed-forward':<12} {'fidelity':>16} {'records':>7}", file=out)
    for o in outcomes:
        fid = "-" if math.isnan(o.fidelity) else f"{o.fidelity:.12f}"
        print(f"{o.label.value:<16} {o.probability:16.12f}  {o.feedforward.value:<12} {fid:>16} {o.n_events:7d}", file=out)
    print(f"Success     {success_mass(outcomes):.12f}", file=out)
    print(f"Recyclable  {recyclable_mass(outcomes):.12f}", file=out)
    if args.rounds:
        total = analysis.simulate_total_probability(spec.alpha, args.rounds, n)
        print(f"Total after {args.rounds} recycling round(s)  {total:.12f}", file=out)
    if args.events:
        print("", file=out)
        for e in herald_events(spec):
            print(f"{str(e.event):<28} {e.label.value:<16} {e.probability:.12f}  F={e.fidelity:.12f}", file=out)
    return EXIT_OK


def sweep_csv(rows, rounds: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "p_success", "p_recyclable", f"p_total_r{rounds}"])
    for r in rows:
        w.writerow([_num(r.alpha), _num(r.p_success), _num(r.p_recyclable), _num(r.p_total_after_rounds)])
    return buf.getvalue()


def plot_sweep(rows, rounds: int, path: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    a = [r.alpha for r in rows]
    ax.plot(a, [r.p_success for r in rows], "-", label="single round")
    if rounds:
        ax.plot(a, [r.p_total_after_rounds for r in rows], ":", label=f"after {rounds} recycling round(s)")
    ax.set_xlabel(r"$|\alpha|$")
    ax.set_ylabel("success probability")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_sweep(args, out) -> int:
    n = _parties(args)
    if args.grid < 2:
        raise ValueError("--grid must be at least 2")
    rows = analysis.sweep(analysis.default_grid(args.grid), args.rounds, n, workers=args.workers)
    text = sweep_csv(rows, args.rounds)
    if args.out:
        try:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_FAIL
    else:
        out.write(text)
    if args.plot:
        try:
            plot_sweep(rows, args.rounds, args.plot)
        except (OSError, ValueError) as exc:
            print(f"cannot write plot {args.plot}: {exc}", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args, out) -> int:
    explicit = args.parties is not None or (args.protocol_pos or args.protocol) is not None
    targets = [_parties(args)] if explicit else [2, 3]
    rows_total = rows_ok = 0
    failed = False
    if args.swap_detectors:
        i, j = args.swap_detectors
        if not any({i, j} <= set(default_detector_map(n)) for n in targets):
            raise ValueError(f"no run has both detectors D{i} and D{j}")
    for n in targets:
        dmap = None
        if args.swap_detectors and {i, j} <= set(default_detector_map(n)):
            # wiring fault injected for negative controls
            dmap = default_detector_map(n)
            dmap[i], dmap[j] = dmap[j], dmap[i]
        report = analysis.verify_tables(n, analysis.table_grid(args.grid or 9), dmap)
        for line in report.lines():
            print(line, file=out)
        rows_total += len(report.rows)
        rows_ok += report.n_passed
        if not report.passed:
            failed = True
            for r in report.rows:
                if not r.passed:
                    print(f"failing signature {r.pattern}: {r.problems[0]}", file=sys.stderr)
            for m in report.mass_errors:
                print(m, file=sys.stderr)
    print(f"{'FAIL' if failed else 'PASS'} rows={rows_ok}/{rows_total}", file=out)
    return EXIT_FAIL if failed else EXIT_OK


def _swap(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x.strip().lstrip("Dd")) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two detector ids, e.g. 5,6") from None
    return i, j


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("protocol_pos", nargs="?", choices=("bell", "ghz"), metavar="{bell,ghz}", help="protocol (same as --protocol)")
    common.add_argument("--protocol", choices=("bell", "ghz"), default=None)
    common.add_argument("--parties", type=int, default=None, help="number of parties for ghz (default 3)")
    common.add_argument("--rounds", type=int, default=None, help="recycling rounds")

    parser = _Parser(prog="ecpsim", description="Heralded linear-optics entanglement concentration simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="heralded outcomes for one alpha")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--events", action="store_true", help="also list every detector record")
    p.set_defaults(func=cmd_simulate, rounds_default=0)

    p = sub.add_parser("sweep", parents=[common], help="success probability versus alpha as CSV")
    p.add_argument("--grid", type=int, default=99)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--plot", default=None, help="write a vector plot (.svg or .pdf)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep, rounds_default=1)

    p = sub.add_parser("verify", parents=[common], help="check the detection tables against simulation")
    p.add_argument("--grid", type=int, default=None, help="number of alpha values (default 9)")
    p.add_argument("--swap-detectors", type=_swap, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify, rounds_default=0)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.protocol_pos and args.protocol and args.protocol_pos != args.protocol:
        parser.error("conflicting protocol arguments")
    if args.rounds is None:
        args.rounds = args.rounds_default
    if args.rounds < 0:
        parser.error("--rounds must be non-negative")
    try:
        return args.func(args, out)
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"ecpsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_entry():
    sys.exit(main())
