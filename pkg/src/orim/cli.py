"""Command-line entry point ``orim``.

Exit codes: 0 success, 1 validation failure (bad arguments, failed checks),
2 I/O error (missing or malformed input, unwritable output).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from orim import bench, io, verify
from orim.basis import Family, MomentSpec, build_basis
from orim.data import load_mnist, read_pgm, split_dataset
from orim.errors import IDXFormatError, OrimError, TruncatedFileError
from orim.moments import compute_central_moments, compute_moments
from orim.unit_disk import DiskMode, build_grid

SCHEMA = "orim/1"
EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this tool reserves 2 for I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _family(value):
    try:
        return Family.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive, default=None,
                        help="cap BLAS worker threads (default: library choice)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    moments = argparse.ArgumentParser(add_help=False)
    moments.add_argument("--family", type=_family, default=Family.PZM,
                         help="zm, pzm or ofmm")
    moments.add_argument("--pmax", type=int, default=5)
    moments.add_argument("--disk", choices=["inner", "outer"], default="inner")

    parser = _Parser(prog="orim", description="Orthogonal rotation-invariant moments "
                     "and group-equivariant networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", parents=[common, moments],
                       help="moments of one PGM image")
    p.add_argument("--image", required=True)
    p.add_argument("--central", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", parents=[common, moments],
                       help="invariance suites on the synthetic corpus")
    p.add_argument("--suite", choices=verify.SUITES, default="all")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--report", required=True)
    p.add_argument("--with-oracles", action="store_true")

    p = sub.add_parser("basis", help="basis table utilities")
    bsub = p.add_subparsers(dest="basis_command", required=True, parser_class=_Parser)
    b = bsub.add_parser("export", parents=[common, moments], help="write a binary basis table")
    b.add_argument("--size", type=int, default=64)
    b.add_argument("--out", required=True)

    p = sub.add_parser("train", parents=[common], help="train a desk-scale model")
    p.add_argument("--variant", default="gcnn-orim",
                   choices=["gcnn-orim", "gcnn-flatten", "cnn-flatten"])
    p.add_argument("--family", type=_family, default=Family.PZM)
    p.add_argument("--pmax", type=int, default=5)
    p.add_argument("--central", action="store_true")
    p.add_argument("--group", choices=["z2", "p4", "p4m"], default="p4m")
    p.add_argument("--channels", type=_positive, default=10)
    p.add_argument("--epochs", type=_positive, default=15)
    p.add_argument("--batch-size", type=_positive, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--train-n", type=_positive, default=5000)
    p.add_argument("--val-n", type=int, default=1000)
    p.add_argument("--test-n", type=int, default=2000)
    p.add_argument("--split-seed", type=int, default=0,
                   help="seed of the data subsample, kept apart from --seed so "
                        "model seeds share one split")
    p.add_argument("--data-dir", default=None, help="overrides ORIM_DATA_DIR")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True, help="directory holding model.json")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--split", choices=["val", "test"], default="test",
                   help="test is the rotated split")
    p.add_argument("--out", default=None)

    p = sub.add_parser("bench", parents=[common, moments], help="moment extraction throughput")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--iters", type=_positive, default=100)
    p.add_argument("--batch", type=_positive, default=64)
    p.add_argument("--out", default=None)
    return parser


def _thread_limit(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _write(path, payload):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    io.write_json(path, payload)


def cmd_compute(args):
    image = read_pgm(args.image)
    if image.shape[0] != image.shape[1]:
        raise OrimError(f"{args.image}: image must be square, got {image.shape}")
    spec = MomentSpec(args.family, args.pmax)
    disk = DiskMode.parse(args.disk)
    if args.central:
        mv = compute_central_moments(image, spec, disk)
    else:
        mv = compute_moments(image, build_basis(spec, build_grid(image.shape[0], disk)))
    payload = io.features_json(mv, np.abs(mv.values))
    payload["central"] = bool(args.central)
    _write(args.out, payload)
    return EXIT_OK


def cmd_verify(args):
    report = verify.run_suite(args.suite, args.family, args.pmax, args.size, args.seed,
                              args.with_oracles)
    _write(args.report, report)
    failed = [r for r in report["results"] if not r["pass"]]
    for r in failed:
        print(f"FAIL {r['test']} [{r['image']}] {r['max_relative']:.3e} > {r['tolerance']:.0e}")
    print(f"{len(report['results']) - len(failed)}/{len(report['results'])} checks passed")
    return EXIT_OK if report["pass"] else EXIT_INVALID


def cmd_basis(args):
    basis = io.export_basis(args.out, args.family, args.pmax, args.size, DiskMode.parse(args.disk))
    print(f"wrote {len(basis.pairs)} pairs x {basis.grid.n_masked} pixels to {args.out}")
    return EXIT_OK


def _load_splits(data_dir, train_n, val_n, test_n, split_seed):
    ds = load_mnist(data_dir)
    return split_dataset(ds, train_n, val_n, test_n, split_seed)


def cmd_train(args):
    from orim.train import TrainConfig, evaluate, train

    config = TrainConfig(
        variant=args.variant, family=args.family.value, p_max=args.pmax, central=args.central,
        group=args.group, channels=args.channels, epochs=args.epochs,
        batch_size=args.batch_size, learning_rate=args.lr, optimizer=args.optimizer,
        seed=args.seed, train_n=args.train_n, val_n=args.val_n, test_n=args.test_n)
    train_ds, val_ds, test_ds = _load_splits(args.data_dir, args.train_n, args.val_n,
                                             args.test_n, args.split_seed)
    out = Path(args.out)
    result = train(config, train_ds, val_ds, out)
    summary = json.loads((out / "summary.json").read_text())
    summary["split_seed"] = args.split_seed
    if len(test_ds):
        ev = evaluate(result.model, test_ds)
        summary["rotated_test_accuracy"] = ev.accuracy
        summary["rotated_test_loss"] = ev.loss
        print(f"rotated test accuracy {ev.accuracy:.4f}")
    _write(out / "summary.json", summary)
    # the checkpoint manifest needs the split seed so eval can rebuild the split
    manifest_path = out / "best" / "model.json"
    manifest = json.loads(manifest_path.read_text())
    manifest["split_seed"] = args.split_seed
    _write(manifest_path, manifest)
    return EXIT_OK


def cmd_eval(args):
    from orim.gcnn.model import load_checkpoint
    from orim.train import evaluate

    ckpt = Path(args.checkpoint)
    manifest = json.loads((ckpt / "model.json").read_text())
    model = load_checkpoint(ckpt)
    cfg = manifest.get("config", {})
    _, val_ds, test_ds = _load_splits(args.data_dir, cfg.get("train_n", 5000),
                                      cfg.get("val_n", 1000), cfg.get("test_n", 2000),
                                      manifest.get("split_seed", 0))
    ds = test_ds if args.split == "test" else val_ds
    ev = evaluate(model, ds)
    payload = {"schema": SCHEMA, "split": args.split, "n": len(ds), "accuracy": ev.accuracy,
               "loss": ev.loss, "confusion": ev.confusion.tolist()}
    print(f"{args.split} accuracy {ev.accuracy:.4f} on {len(ds)} images")
    if args.out:
        _write(args.out, payload)
    return EXIT_OK


def cmd_bench(args):
    res = bench.bench_precomputed(args.family, args.pmax, args.size, args.iters, args.batch,
                                  args.seed, DiskMode.parse(args.disk))
    print(f"{res.family} p_max={res.p_max} M={res.size} pairs={res.n_pairs}: "
          f"{res.moments_per_second:.3e} moments/s, "
          f"{res.seconds_per_coefficient * 1e9:.2f} ns per coefficient")
    if args.out:
        _write(args.out, {"schema": SCHEMA, **res.as_dict()})
    return EXIT_OK


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "basis": cmd_basis,
            "train": cmd_train, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s:%(name)s:%(message)s")
    try:
        with _thread_limit(args.threads):
            return COMMANDS[args.command](args)
    except (IDXFormatError, TruncatedFileError) as exc:
        print(f"orim: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        where = f"{exc.filename}: " if exc.filename and str(exc.filename) not in str(exc) else ""
        print(f"orim: error: {where}{exc}", file=sys.stderr)
        return EXIT_IO
    except (OrimError, ValueError) as exc:
        print(f"orim: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
