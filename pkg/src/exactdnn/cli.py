"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
Data goes to files (or stdout when no output path is given); diagnostics go
to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import array as aa
from . import builders, dnn, perturb
from .bundle import IntegrityError, make_bundle, read_bundle, verify_bundle, write_bundle
from .formats import (
    FormatError,
    dumps_tsv,
    fmt_value,
    read_idx_images,
    read_idx_labels,
    read_model,
    read_tsv,
    write_model,
)
from .laws import check_laws

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _betas(text: str) -> float | list[float]:
    vals = [float(x) for x in text.split(",")]
    return vals[0] if len(vals) == 1 else vals


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_build_combinatoric(args) -> int:
    sizes = [int(k) for k in args.sets.split(",")]
    sets = [builders.feature_set(p, _letters(k)) for p, k in enumerate(sizes, start=1)]
    model = builders.build_combinatoric(sets, args.plan, _betas(args.beta))
    write_model(model, args.output)
    print(f"{len(model.category_keys)} categories, {model.depth} layers", file=sys.stderr)
    return EXIT_OK


def _letters(k: int) -> str:
    if not 1 <= k <= 26:
        raise ValueError(f"feature set size {k} outside 1-26")
    return "abcdefghijklmnopqrstuvwxyz"[:k]


def cmd_build_selective(args) -> int:
    if args.words.startswith("builtin:"):
        words = builders.shipped_words(int(args.words[8:]))
    else:
        words = builders.load_words(args.words)
    model = builders.build_selective(words, args.plan, _betas(args.beta))
    write_model(model, args.output)
    print(f"{len(model.category_keys)} categories, {model.depth} layers", file=sys.stderr)
    return EXIT_OK


def cmd_build_images(args) -> int:
    images = read_idx_images(Path(args.images).read_bytes())
    labels = read_idx_labels(Path(args.labels).read_bytes())
    if len(labels) != len(images):
        raise FormatError(f"{len(images)} images but {len(labels)} labels")
    n = len(images) if args.max is None else min(args.max, len(images))
    images, labels = images[:n], labels[:n]
    if args.skip_invalid:
        keep, seen = [], set()
        side = images.shape[1] - 2 * args.trim
        for i in range(n):
            img = images[i, args.trim:args.trim + side, args.trim:args.trim + side]
            sig = (img > args.threshold).tobytes()
            if not (img > args.threshold).any() or sig in seen:
                print(f"skipping image {labels[i]}_{i:05d}", file=sys.stderr)
                continue
            seen.add(sig)
            keep.append(i)
        ids = [f"{labels[i]}_{i:05d}" for i in keep]
        images, labels = images[keep], [labels[i] for i in keep]
    else:
        ids = None
    model, y0 = builders.build_from_images(images, labels, args.threshold, args.trim,
                                           args.beta, ids=ids)
    bundle = make_bundle(model, args.precision, y0)
    write_bundle(bundle, args.output)
    print(f"{len(model.category_keys)} image categories", file=sys.stderr)
    return EXIT_OK


def cmd_infer(args) -> int:
    model = read_model(args.model)
    y0 = read_tsv(args.input)
    if args.engine == "relu":
        yl = dnn.infer_relu(model, y0)
    elif args.engine == "semiring":
        yl = dnn.infer_semiring(model, y0)
    else:
        W, b = dnn.collapse(model)
        y0 = aa.select(y0, model.input_keys)
        yl = aa.select(dnn.infer_collapsed(W, b, y0, model.depth), model.category_keys)
    _emit(dumps_tsv(yl), args.output)
    return EXIT_OK


def cmd_verify_exact(args) -> int:
    model = read_model(args.model)
    y0 = dnn.exact_input(model)
    yl = dnn.infer_relu(model, y0)
    want = aa.identity(model.category_keys)
    if yl == want:
        print(f"exact: Y_L is the identity over {len(want)} categories", file=sys.stderr)
        return EXIT_OK
    got, exp = yl.to_dict(), want.to_dict()
    bad = min(k for k in exp.keys() | got.keys() if got.get(k, 0.0) != exp.get(k, 0.0))
    print(f"not exact: category={bad[0]} sample={bad[1]} expected={fmt_value(exp.get(bad, 0.0))} "
          f"got={fmt_value(got.get(bad, 0.0))}", file=sys.stderr)
    return EXIT_FAIL


def cmd_flatten(args) -> int:
    _emit(dumps_tsv(dnn.flatten(read_model(args.model))), args.output)
    return EXIT_OK


def cmd_perturb(args) -> int:
    model = read_model(args.model)
    grid = perturb.parse_grid(args.grid)
    rep = perturb.sweep(model, args.category, args.feature, grid)
    lines = ["r\tPd\tPfa"]
    lines += [f"{fmt_value(r)}\t{d}\t{fa}" for r, d, fa in zip(rep.grid, rep.pd, rep.pfa)]
    closed = "none" if rep.r_d_closed is None else repr(rep.r_d_closed)
    lines.append(f"# r_d_closed={closed}")
    lines.append(f"# r_d_empirical={rep.r_d_empirical!r}")
    for note in rep.notes:
        lines.append(f"# note={note}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_export_testvec(args) -> int:
    bundle = make_bundle(read_model(args.model), args.precision)
    write_bundle(bundle, args.output)
    return EXIT_OK


def cmd_verify_bundle(args) -> int:
    try:
        bundle = read_bundle(args.bundle)
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rep = verify_bundle(bundle, read_tsv(args.input))
    sys.stdout.write("\n".join(rep.lines()) + "\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_check_algebra(args) -> int:
    rep = check_laws(args.trials, args.seed)
    sys.stdout.write("\n".join(rep.lines()) + "\n")
    print(f"{rep.total_violations} violations", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_FAIL


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="exactdnn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("build-combinatoric", help="combinatoric (Kronecker) exact model")
    s.add_argument("--sets", required=True, help="feature set sizes, e.g. 2,2,2,2")
    s.add_argument("--plan", default=None, help="layer plan, e.g. 'f1,f2|f3,f4;f12,f34'")
    s.add_argument("--beta", default="1")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_build_combinatoric)

    s = sub.add_parser("build-selective", help="exact model over a word list")
    s.add_argument("--words", required=True, help="word file, or builtin:2|3|4")
    s.add_argument("--plan", default=None)
    s.add_argument("--beta", default="1")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_build_selective)

    s = sub.add_parser("build-images", help="exact model and bundle from IDX images")
    s.add_argument("--images", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--trim", type=int, default=1)
    s.add_argument("--max", type=int, default=None)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--precision", default="exact")
    s.add_argument("--skip-invalid", action="store_true",
                   help="drop blank or duplicate images instead of failing")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_build_images)

    s = sub.add_parser("infer", help="run inference on a batch")
    s.add_argument("-m", "--model", required=True)
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--engine", choices=["relu", "semiring", "collapsed"], default="relu")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("verify-exact", help="check that the exact input yields the identity")
    s.add_argument("-m", "--model", required=True)
    s.set_defaults(func=cmd_verify_exact)

    s = sub.add_parser("flatten", help="single-layer weights of a 0/1 model")
    s.add_argument("-m", "--model", required=True)
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_flatten)

    s = sub.add_parser("perturb", help="detection sweep for one category/feature")
    s.add_argument("-m", "--model", required=True)
    s.add_argument("-c", "--category", required=True)
    s.add_argument("-f", "--feature", required=True)
    s.add_argument("--grid", default="0:2:0.001")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("export-testvec", help="write a test-vector bundle")
    s.add_argument("-m", "--model", required=True)
    s.add_argument("--precision", default="exact", help="fractional bits, or 'exact'")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_export_testvec)

    s = sub.add_parser("verify-bundle", help="compare a candidate output to a bundle")
    s.add_argument("-b", "--bundle", required=True)
    s.add_argument("-i", "--input", required=True)
    s.set_defaults(func=cmd_verify_bundle)

    s = sub.add_parser("check-algebra", help="randomized algebraic-law self test")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_check_algebra)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"exactdnn {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
