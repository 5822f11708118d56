"""
Command-line front end: segment, sweep, phantom, eval and compare.

Exit codes: 0 success, 1 usage or I/O error, 2 non-convergence under
``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import QFSNetError
from .imaging import (
    PhantomSpec,
    binarize,
    disk_cleanup,
    gen_phantom,
    normalize,
    read_mask,
    read_pgm,
    write_manifest,
    write_mask,
    write_pgm,
)
from .metrics import evaluate, ks_test_one_sided, report_json
from .network import NetworkConfig, run
from .qsig import BOUNDARY_SETS, DEFAULT_LAMBDA, LAMBDA_SWEEP, QSigParams
from .schemes import SCHEMES

__all__ = ["main", "build_parser", "segment_image", "sweep_rows", "load_corpus"]

EXIT_OK, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2
SWEEP_COLUMNS = ("image", "levels", "lambda", "scheme", "set", "acc", "ds", "ppv", "ss", "iterations")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for non-convergence here
    def error(self, message):
        raise UsageError(message)


def _lambda(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"lambda must lie in the open range (0, 1), got {text}")
    return v


def _levels(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"levels must be an integer >= 2, got {text}")
    return v


def _set(text: str) -> str:
    v = text.upper()
    if v not in BOUNDARY_SETS:
        raise argparse.ArgumentTypeError(f"set must be one of {', '.join(BOUNDARY_SETS)}, got {text}")
    return v


def _thresh(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"threshold must lie in (0, 1), got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _listof(conv):
    def parse(text):
        items = [t for t in text.split(",") if t.strip()]
        if not items:
            raise argparse.ArgumentTypeError("expected a non-empty comma-separated list")
        return [conv(t.strip()) for t in items]

    return parse


def _scheme(text: str) -> str:
    if text not in SCHEMES:
        raise argparse.ArgumentTypeError(f"scheme must be one of {', '.join(SCHEMES)}, got {text}")
    return text


def _add_run_flags(p, sweep=False):
    if sweep:
        p.add_argument("--levels", type=_listof(_levels), default=[4, 6, 8])
        p.add_argument("--lambda", dest="lam", type=_listof(_lambda), default=list(LAMBDA_SWEEP))
        p.add_argument("--scheme", type=_listof(_scheme), default=["xi"])
        p.add_argument("--set", dest="bset", type=_listof(_set), default=["S2"])
    else:
        p.add_argument("--levels", type=_levels, default=8)
        p.add_argument("--lambda", dest="lam", type=_lambda, default=DEFAULT_LAMBDA)
        p.add_argument("--scheme", type=_scheme, default="xi")
        p.add_argument("--set", dest="bset", type=_set, default="S2")
    p.add_argument("--max-iters", type=_positive_int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--mode", choices=("recompute", "gradient"), default="recompute")
    p.add_argument("--t-exp", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius", type=_positive_int, default=5)
    p.add_argument("--thresh", type=_thresh, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qfsnet", description="Qutrit-inspired self-supervised image segmentation.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("segment", help="segment one PGM image")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output mask (PGM)")
    p.add_argument("--trace", help="per-epoch loss trace (CSV)")
    p.add_argument("--gnuplot", help="loss trace as a whitespace-separated data file")
    p.add_argument("--gt", help="ground-truth mask; enables the metrics report")
    p.add_argument("--report", help="metrics JSON path (default: next to --out)")
    p.add_argument("--strict", action="store_true", help="exit 2 when the run does not converge")
    _add_run_flags(p)

    p = sub.add_parser("sweep", help="parameter sweep over an image corpus")
    p.add_argument("--input", required=True, help="corpus directory of X.pgm / X_gt.pgm pairs")
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--report", help="per-image metrics JSON (one entry per image and configuration)")
    p.add_argument("--strict", action="store_true")
    _add_run_flags(p, sweep=True)

    p = sub.add_parser("phantom", help="write synthetic lesion phantoms")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=_positive_int, default=1, help="phantoms with seeds seed..seed+count-1")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--lesions", type=int, default=2)
    p.add_argument("--radii", type=_listof(float), default=[8.0, 18.0], help="lesion radius range lo,hi")
    p.add_argument("--contrast", type=float, default=0.4)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--bias", type=float, default=0.1)
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)

    p = sub.add_parser("eval", help="score a predicted mask against ground truth")
    p.add_argument("--input", required=True, help="predicted mask (PGM)")
    p.add_argument("--gt", required=True)
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("compare", help="one-sided KS test on the Dice columns of two sweep reports")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--column", default="ds")
    p.add_argument("--alpha", type=float, default=0.05)
    return ap


def _config(args, levels, lam, scheme, bset) -> NetworkConfig:
    return NetworkConfig(
        qsig=QSigParams(levels=levels, lam=lam),
        scheme=scheme,
        boundary_set=bset,
        max_epochs=args.max_iters,
        tolerance=args.tol,
        update_mode=args.mode,
        t_exponent=args.t_exp,
        seed=args.seed,
    )


def segment_image(img, cfg: NetworkConfig, thresh=0.5, radius=5):
    """Run the network on a gray image; returns ``(mask, field, trace)``."""
    mu, trace = run(normalize(img), cfg)
    return disk_cleanup(binarize(mu, thresh), radius), mu, trace


def _cmd_segment(args) -> int:
    img = read_pgm(args.input)
    cfg = _config(args, args.levels, args.lam, args.scheme, args.bset)
    mask, _, trace = segment_image(img, cfg, args.thresh, args.radius)
    write_mask(args.out, mask)
    if args.trace:
        trace.to_csv(args.trace)
    if args.gnuplot:
        trace.to_gnuplot(args.gnuplot)
    if args.gt:
        gt = read_mask(args.gt)
        rep = evaluate(mask, gt)
        path = args.report or str(Path(args.out).with_suffix(".json"))
        doc = rep.as_dict()
        doc.update(iterations=trace.iterations, status=trace.status)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if trace.status != "converged":
        print(f"qfsnet: no convergence after {trace.iterations} epochs", file=sys.stderr)
        if args.strict:
            return EXIT_NOCONV
    return EXIT_OK


def load_corpus(directory):
    """Pairs ``(name, image, gt)`` for every ``X.pgm`` with a matching ``X_gt.pgm``, sorted by name."""
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"corpus directory {directory} does not exist")
    out = []
    for img_path in sorted(d.glob("*.pgm")):
        name = img_path.stem
        if name.endswith("_gt"):
            continue
        gt_path = d / f"{name}_gt.pgm"
        if gt_path.exists():
            out.append((name, read_pgm(img_path), read_mask(gt_path)))
    return out


def sweep_rows(corpus, args):
    """One row per (image, levels, lambda, scheme, set), then a mean row."""
    rows = []
    converged = True
    for name, img, gt in corpus:
        for levels in args.levels:
            for lam in args.lam:
                for scheme in args.scheme:
                    for bset in args.bset:
                        cfg = _config(args, levels, lam, scheme, bset)
                        mask, _, trace = segment_image(img, cfg, args.thresh, args.radius)
                        rep = evaluate(mask, gt)
                        converged &= trace.status == "converged"
                        rows.append(
                            dict(image=name, levels=levels, lam=lam, scheme=scheme, bset=bset,
                                 acc=rep.acc, ds=rep.ds, ppv=rep.ppv, ss=rep.ss,
                                 iterations=trace.iterations, report=rep)
                        )
    return rows, converged


def _write_sweep(path, rows):
    keys = ("acc", "ds", "ppv", "ss", "iterations")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r["image"], r["levels"], repr(r["lam"]), r["scheme"], r["bset"]]
                       + [repr(float(r[k])) for k in keys[:4]] + [r["iterations"]])
        means = [repr(float(np.mean([r[k] for r in rows]))) for k in keys]
        w.writerow(["mean", "", "", "", ""] + means)


def _cmd_sweep(args) -> int:
    corpus = load_corpus(args.input)
    if not corpus:
        raise UsageError(f"no X.pgm / X_gt.pgm pairs found in {args.input}")
    rows, converged = sweep_rows(corpus, args)
    _write_sweep(args.out, rows)
    if args.report:
        keyed = {f"{r['image']}/L{r['levels']}/{r['lam']!r}/{r['scheme']}/{r['bset']}": r["report"] for r in rows}
        with open(args.report, "w") as fh:
            fh.write(report_json(keyed))
    if not converged and args.strict:
        return EXIT_NOCONV
    return EXIT_OK


def _cmd_phantom(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if len(args.radii) != 2:
        raise UsageError("--radii takes exactly two values: lo,hi")
    for seed in range(args.seed, args.seed + args.count):
        spec = PhantomSpec(
            size=args.size,
            lesion_count=args.lesions,
            lesion_radii=tuple(args.radii),
            contrast=args.contrast,
            noise_sigma=args.noise,
            bias_amplitude=args.bias,
            seed=seed,
            bits=args.bits,
        )
        img, gt, lesions = gen_phantom(spec)
        stem = out / f"phantom_{seed:03d}"
        write_pgm(f"{stem}.pgm", img, maxval=(1 << args.bits) - 1)
        write_mask(f"{stem}_gt.pgm", gt)
        write_manifest(f"{stem}.json", spec, lesions)
    return EXIT_OK


def _cmd_eval(args) -> int:
    rep = evaluate(read_mask(args.input), read_mask(args.gt))
    text = json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _read_column(path, column):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise UsageError(f"{path} has no column {column!r}")
        return [float(r[column]) for r in reader if r.get("image") != "mean"]


def _cmd_compare(args) -> int:
    a = _read_column(args.run_a, args.column)
    b = _read_column(args.run_b, args.column)
    d, reject = ks_test_one_sided(a, b, args.alpha)
    sys.stdout.write(json.dumps({"D": d, "reject": reject, "alpha": args.alpha}, sort_keys=True) + "\n")
    return EXIT_OK


_COMMANDS = {
    "segment": _cmd_segment,
    "sweep": _cmd_sweep,
    "phantom": _cmd_phantom,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qfsnet: {exc}", file=sys.stderr)
    except (OSError, QFSNetError, ValueError) as exc:
        print(f"qfsnet: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
