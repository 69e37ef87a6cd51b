"""Command-line drivers.

Exit status: 0 success, 1 usage error, 2 data or parse error, 3 numeric guard
(e.g. too many hidden units for exact enumeration).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import data
from .exact import HiddenSetTooLarge, TooManyParents, log_likelihood_exact
from .experiments import fig5_rows, gauss_check
from .learning import TrainConfig, classify_many, normalized_score, score_patterns, train
from .meanfield import SolveOptions, solve
from .network import ancestral_samples

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

FIG5_COLUMNS = ["index", "exact", "bound", "e_mf", "e_unif"]
TRACE_COLUMNS = ["epoch", "mean_bound"]
MF_COLUMNS = ["node", "visible", "mu", "xi"]

log = logging.getLogger("sbnmf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("layer sizes must be positive")
    return vals


def _int_list_any(text):
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _range(text):
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from None
    if a > b:
        raise argparse.ArgumentTypeError(f"empty range [{a}, {b}]")
    return a, b


def _solver_flags(p):
    p.add_argument("--tol-mu", type=float, default=1e-8, help="stop when max |dmu| falls below this")
    p.add_argument("--tol-bound", type=float, default=1e-10, help="stop when |dL| falls below this")
    p.add_argument("--max-sweeps", type=int, default=1000, help="cap on xi/mu sweeps per solve")


def _options(args):
    return SolveOptions(tol_mu=args.tol_mu, tol_bound=args.tol_bound, max_sweeps=args.max_sweeps)


def _read(path):
    return Path(path).read_text(encoding="utf-8")


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _csv_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _visible_map(net, width, explicit=None):
    if explicit is None:
        return data.default_visible_map(net, width)
    if len(explicit) != width:
        raise UsageError(f"--visible lists {len(explicit)} nodes but patterns have {width} pixels")
    return np.array(explicit)


# -- commands ----------------------------------------------------------------

def cmd_fig5(args):
    fh, close = _csv_out(args.out)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(FIG5_COLUMNS)
    e_mf, e_unif, bad = [], [], 0
    for row in fig5_rows(args.count, args.seed, _options(args)):
        w.writerow([row.index, repr(row.exact), repr(row.bound), repr(row.e_mf), repr(row.e_unif)])
        e_mf.append(row.e_mf)
        e_unif.append(row.e_unif)
        bad += not row.converged
    if close:
        fh.close()
    e_mf, e_unif = np.array(e_mf), np.array(e_unif)
    report = sys.stderr if args.out in (None, "-") else sys.stdout
    print(f"nets {args.count}", file=report)
    print(f"mean_e_mf {e_mf.mean():.6f}", file=report)
    print(f"rms_e_unif {np.sqrt(np.mean(e_unif ** 2)):.6f}", file=report)
    print(f"min_e_mf {e_mf.min():.3e}", file=report)
    print(f"nonconverged {bad}", file=report)


def cmd_gauss_check(args):
    r = gauss_check()
    print(f"argmin_xi {r.argmin:.6f}")
    print(f"min_bound {r.minimum:.6f}")
    print(f"bound_at_xi0 {r.at_zero:.6f}")
    print(f"exact_reference {r.exact_reference:.3f}")


def cmd_gen_net(args):
    net = data.gen_random_layered(args.layers, args.weight_range, args.seed)
    _write(args.out, data.emit_network(net))


def cmd_sample(args):
    net = data.parse_network(_read(args.net))
    if (args.rows is None) != (args.cols is None):
        raise UsageError("give both --rows and --cols, or neither")
    rows, cols = (args.rows, args.cols) if args.rows else (1, net.n_nodes)
    vis = data.default_visible_map(net, rows * cols)
    S = ancestral_samples(net, args.count, data.make_rng(args.seed))
    _write(args.out, data.emit_dataset(data.BitmapDataset(rows, cols, S[:, vis])))


def cmd_loglik(args):
    net = data.parse_network(_read(args.net))
    ev = data.parse_evidence(_read(args.evidence))
    ev.validate(net.n_nodes)
    print(repr(log_likelihood_exact(net, ev)))


def cmd_mf(args):
    net = data.parse_network(_read(args.net))
    ev = data.parse_evidence(_read(args.evidence))
    ev.validate(net.n_nodes)
    sol = solve(net, ev, _options(args))
    print(repr(sol.total))
    print(f"converged {str(sol.converged).lower()}", file=sys.stderr)
    print(f"sweeps {sol.sweeps}", file=sys.stderr)
    if args.out:
        fh, close = _csv_out(args.out)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MF_COLUMNS)
        for i in range(net.n_nodes):
            w.writerow([i, int(i in ev.clamped), repr(float(sol.state.mu[i])), repr(float(sol.state.xi[i]))])
        if close:
            fh.close()


def cmd_train(args):
    ds = data.parse_dataset(_read(args.data))
    if args.net:
        net = data.parse_network(_read(args.net))
    elif args.layers:
        if args.layers[-1] != ds.width:
            raise UsageError(f"bottom layer has {args.layers[-1]} units but patterns have {ds.width} pixels")
        net = data.gen_random_layered(args.layers, args.init_range, args.seed)
    else:
        raise UsageError("give either --net or --layers")
    vis = _visible_map(net, ds.width, args.visible)
    cfg = TrainConfig(rate=args.rate, sweeps=args.sweeps, seed=args.seed, solve=_options(args))
    res = train(net, ds, vis, cfg)
    _write(args.out, data.emit_network(res.net))
    fh, close = _csv_out(args.trace)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for k, v in enumerate(res.trace, start=1):
        w.writerow([k, repr(v)])
    if close:
        fh.close()
    if res.nonconverged:
        print(f"nonconverged {res.nonconverged}", file=sys.stderr)


def _load_models(directory):
    paths = sorted(Path(directory).glob("class-*.sbn"), key=lambda p: int(p.stem.split("-", 1)[1]))
    labels = [int(p.stem.split("-", 1)[1]) for p in paths]
    if labels != list(range(len(labels))):
        raise UsageError(f"{directory} must contain class-0.sbn ... class-<k>.sbn with no gaps")
    if len(paths) < 2:
        raise UsageError(f"{directory} holds fewer than two class models")
    return [data.parse_network(_read(p)) for p in paths]


def cmd_classify(args):
    models = _load_models(args.models)
    sets = [data.parse_dataset(_read(p)) for p in args.data]
    correct = total = 0
    print("file,pattern,label")
    for f, ds in enumerate(sets):
        vis = _visible_map(models[0], ds.width, args.visible)
        labels, _ = classify_many(models, ds, vis, _options(args))
        for r, lab in enumerate(labels):
            print(f"{f},{r},{int(lab)}")
        correct += int(np.sum(labels == f))
        total += len(labels)
    if len(sets) > 1 and total:
        # file k is taken to hold patterns of class k
        print(f"accuracy {correct / total:.6f}", file=sys.stderr)


def cmd_score(args):
    net = data.parse_network(_read(args.net))
    ds = data.parse_dataset(_read(args.data))
    vis = _visible_map(net, ds.width, args.visible)
    total = float(np.sum(score_patterns(net, ds, vis, _options(args))))
    print(f"total_bound {total!r}")
    print(f"normalized {normalized_score(total, len(ds), ds.width)!r}")


def build_parser():
    p = _Parser(prog="sbnmf", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("fig5", help="mean-field vs exact log-likelihood on random 2x4x6 nets",
                       description=f"CSV columns: {', '.join(FIG5_COLUMNS)}. "
                                   "e_mf = bound/exact - 1; e_unif = ln(2^-6)/exact - 1.")
    s.add_argument("--count", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="CSV path (default: stdout, summary to stderr)")
    _solver_flags(s)
    s.set_defaults(func=cmd_fig5)

    s = sub.add_parser("gauss-check", help="xi-bound for a standard normal input")
    s.set_defaults(func=cmd_gauss_check)

    s = sub.add_parser("gen-net", help="random layered network")
    s.add_argument("--layers", type=_int_list, required=True, help="e.g. 2,4,6 (top layer first)")
    s.add_argument("--weight-range", type=_range, default=(-1.0, 1.0))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen_net)

    s = sub.add_parser("sample", help="ancestral samples of the bottom nodes as a bitmap dataset")
    s.add_argument("--net", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--rows", type=int)
    s.add_argument("--cols", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("loglik", help="exact ln P(evidence) by enumeration")
    s.add_argument("--net", required=True)
    s.add_argument("--evidence", required=True)
    s.set_defaults(func=cmd_loglik)

    s = sub.add_parser("mf", help="mean-field lower bound on ln P(evidence)",
                       description=f"--out CSV columns: {', '.join(MF_COLUMNS)}.")
    s.add_argument("--net", required=True)
    s.add_argument("--evidence", required=True)
    s.add_argument("--out", help="per-node mu/xi CSV")
    _solver_flags(s)
    s.set_defaults(func=cmd_mf)

    s = sub.add_parser("train", help="gradient ascent on the mean-field bound",
                       description=f"--trace CSV columns: {', '.join(TRACE_COLUMNS)}.")
    s.add_argument("--data", required=True)
    s.add_argument("--net", help="initial network")
    s.add_argument("--layers", type=_int_list, help="random initial network with these layers")
    s.add_argument("--init-range", type=_range, default=(-0.1, 0.1))
    s.add_argument("--visible", type=_int_list_any, help="node index per pixel (default: last nodes)")
    s.add_argument("--rate", type=float, default=0.05)
    s.add_argument("--sweeps", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--trace", help="per-epoch mean bound CSV (default: stdout)")
    _solver_flags(s)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("classify", help="label patterns by the class model with the highest bound",
                       description="Prints CSV 'file,pattern,label'. With several --data files, "
                                   "file k is taken as class k and accuracy goes to stderr.")
    s.add_argument("--models", required=True, help="directory of class-<k>.sbn files")
    s.add_argument("--data", required=True, nargs="+")
    s.add_argument("--visible", type=_int_list_any)
    _solver_flags(s)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("score", help="total and normalized bound of a model on a dataset")
    s.add_argument("--net", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--visible", type=_int_list_any)
    _solver_flags(s)
    s.set_defaults(func=cmd_score)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    for flag in ("count", "max_sweeps", "sweeps"):
        if getattr(args, flag, 1) is not None and getattr(args, flag, 1) < 1:
            parser.error(f"--{flag.replace('_', '-')} must be at least 1")
    if getattr(args, "rate", 0.0) < 0:
        parser.error("--rate must be non-negative")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"sbnmf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HiddenSetTooLarge, TooManyParents) as exc:
        print(f"sbnmf: numeric guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        # ParseError and NetworkError are ValueErrors
        print(f"sbnmf: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
