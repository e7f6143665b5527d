"""Command-line front end: ``sqarray <command> ...``.

Exit codes: 0 success, 2 validation or input failure, 3 catalog mismatch,
4 refused computation (size caps).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import catalog
from .core import (
    AuxiliaryBlockDesign,
    DesignError,
    DesignParseError,
    InvalidDesignError,
    SpacingSequence,
    cyclic_auxiliary,
    dumps_design,
    from_square_array,
    load_design,
    render,
    to_square_array,
    validate_auxiliary,
    validate_square,
)
from .cyclic import (
    class_counts,
    enumerate_cyclic,
    equivalence_classes,
    in_window,
    min_metric_search,
    possibly_isomorphic,
    table_grid,
)
from .fixtures import resolve
from .metrics import closed_form_metrics, direct_metrics
from .randgroup import GroupError, GroupTooLarge, group_for, is_doubly_transitive, randomize
from .spacefill import RefusedComputation, phi2, phi2_values, Phi2Summary, render_controls

log = logging.getLogger("sqarray")

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH, EXIT_REFUSED = 0, 2, 3, 4


def _read(path):
    return load_design(resolve(path))


def _square(design):
    return to_square_array(design) if isinstance(design, AuxiliaryBlockDesign) else design


def _aux(design):
    return design if isinstance(design, AuxiliaryBlockDesign) else from_square_array(design)


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    return "" if x is None else f"{x:.6f}"


def cmd_validate(args):
    design = _read(args.design)
    report = validate_auxiliary(design) if isinstance(design, AuxiliaryBlockDesign) else validate_square(design)
    if report.ok:
        print("valid")
        return EXIT_OK
    for v in report.violations:
        print(v)
    for r, c in report.cells:
        print(f"  cell ({r}, {c})")
    return EXIT_INVALID


def cmd_construct(args):
    if args.cyclic:
        if not args.block:
            raise DesignError("--cyclic needs --block, e.g. --block 0,3,7")
        aux = cyclic_auxiliary(args.cyclic, [int(b) for b in args.block.split(",")])
    elif args.design:
        aux = _aux(_read(args.design))
    else:
        raise DesignError("give a design file or --cyclic T --block ...")
    sq = to_square_array(aux)
    if args.output:
        Path(args.output).write_text(dumps_design(sq))
    print(render(aux))
    print()
    print(render(sq, show_tests=args.show_tests))
    return EXIT_OK


def cmd_invert(args):
    aux = from_square_array(_read(args.design))
    _write(dumps_design(aux), args.output)
    if args.output:
        print(render(aux))
    return EXIT_OK


def cmd_metrics(args):
    design = _read(args.design)
    sq, aux = _square(design), _aux(design)
    report = direct_metrics(sq) if args.method == "direct" else closed_form_metrics(aux)
    out = report.as_dict()
    if args.oracle:
        other = closed_form_metrics(aux) if args.method == "direct" else direct_metrics(sq)
        out["oracle_max_discrepancy"] = report.max_difference(other)
    print(json.dumps(out, indent=2))
    if args.csv:
        new = not Path(args.csv).exists()
        with open(args.csv, "a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["design", "t", "k", *report.as_dict().keys()])
            w.writerow([args.design, sq.t, sq.k, *report.as_dict().values()])
    return EXIT_OK


def cmd_enumerate(args):
    classes = equivalence_classes(args.t, args.k)
    class_of = {s: c for c in classes for s in c.representatives}
    rows = []
    for s in enumerate_cyclic(args.t, args.k):
        c = class_of[s]
        m = c.metrics
        rows.append([s.label(), c.connected, c.class_id, _fmt(m and m.a_abd), _fmt(m and m.a_ct), _fmt(m and m.a_tt)])
    sys.stdout.write(_csv_text(["spacings", "connected", "class_id", "a_abd", "a_ct", "a_tt"], rows))
    return EXIT_OK


def cmd_classes(args):
    classes = equivalence_classes(args.t, args.k)
    if args.counts:
        counts = class_counts(args.t, args.k, classes)
        print(json.dumps({"t": args.t, "k": args.k, **counts.as_dict()}, indent=2))
        return EXIT_OK
    rows = []
    for c in classes:
        m = c.metrics
        rows.append([c.class_id, " ".join(s.label() for s in c.representatives), c.connected,
                     _fmt(m and m.a_abd), _fmt(m and m.a_ct), _fmt(m and m.a_tt)])
    sys.stdout.write(_csv_text(["class_id", "spacings", "connected", "a_abd", "a_ct", "a_tt"], rows))
    for a, b in possibly_isomorphic(classes):
        print(f"# classes {a} and {b} have equal metrics (possibly isomorphic)")
    return EXIT_OK


def cmd_search(args):
    if args.grid:
        cells = table_grid(range(args.t_min, args.t_max + 1), range(args.k_min, args.k_max + 1))
    else:
        if args.t is None or args.k is None:
            raise DesignError("search needs --t and --k, or --grid")
        cells = [(args.t, args.k)]
    rows = []
    for t, k in cells:
        cls, m = min_metric_search(t, k)
        rows.append([t, k, f"{100 * k / t:.2f}", "yes" if in_window(t, k) else "",
                     " ".join(s.label() for s in cls.representatives), _fmt(m.a_abd), _fmt(m.a_ct), _fmt(m.a_tt)])
    sys.stdout.write(_csv_text(["t", "k", "percent_controls", "in_20_25", "spacings", "a_abd", "a_ct", "a_tt"], rows))
    return EXIT_OK


def cmd_randomize(args):
    sq = _square(_read(args.design))
    group = group_for(sq.t, args.group)
    out = randomize(sq, group, args.seed)
    _write(dumps_design(out), args.output)
    if args.output:
        print(render(out))
    return EXIT_OK


def cmd_spacefill(args):
    sq = _square(_read(args.design))
    group = group_for(sq.t, args.group)
    if args.mode == "exhaustive" and not is_doubly_transitive(group):
        log.warning("group of order %d is not doubly transitive", len(group))
    values = phi2_values(sq, group, args.mode, args.n, args.seed, args.force)
    summary = Phi2Summary.from_values(values)
    out = {"design_phi2": phi2(sq), "group_order": len(group), "mode": args.mode, **summary.as_dict(),
           "quantiles": "linear interpolation between order statistics (type 7)"}
    print(json.dumps(out, indent=2))
    if args.raw:
        Path(args.raw).write_text("phi2\n" + "\n".join(f"{v:.10f}" for v in values) + "\n")
    if args.show:
        print(render_controls(sq))
    return EXIT_OK


def cmd_catalog(args):
    kwargs = {}
    if args.table.upper() == "T2" and args.sample:
        kwargs = {"sample": args.sample, "seed": args.seed}
    rows = catalog.run(args.table, **kwargs)
    if args.csv:
        sys.stdout.write(_csv_text(["table", "key", "quantity", "expected", "computed", "abs_diff", "tol", "status"],
                                   [[r.table_id, r.key, r.quantity, r.expected, r.computed, f"{r.abs_diff:.3e}",
                                     r.tol, r.status] for r in rows]))
    else:
        for r in rows:
            print(r.line())
    fails = sum(r.status == "fail" for r in rows)
    better = sum(r.status == "better" for r in rows)
    print(f"# {len(rows)} cells, {fails} fail, {better} better than reference")
    if args.table.upper() == "T2":
        print("# reference columns 2 and 5 are read as Q1 and Q3; their header order conflicts with the increasing values")
    return EXIT_MISMATCH if fails else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqarray", description="Augmented row-column square array designs")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a design file")
    s.add_argument("design")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("construct", help="build the square array from an auxiliary design")
    s.add_argument("design", nargs="?")
    s.add_argument("--cyclic", type=int, metavar="T", help="develop --block cyclically mod T")
    s.add_argument("--block", help="comma-separated residues, e.g. 0,3,7")
    s.add_argument("-o", "--output", help="write the square array JSON here")
    s.add_argument("--show-tests", action="store_true", help="print test-line numbers")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("invert", help="recover the auxiliary design from a square array")
    s.add_argument("design")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("metrics", help="average-variance metrics of a design")
    s.add_argument("design")
    s.add_argument("--method", choices=["direct", "closed_form"], default="direct")
    s.add_argument("--oracle", action="store_true", help="run both routes and report the max discrepancy")
    s.add_argument("--csv", help="append a CSV row to this file")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("enumerate", help="all canonical cyclic designs for (t, k)")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("classes", help="multiplier equivalence classes for (t, k)")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--counts", action="store_true", help="print class counts only")
    s.set_defaults(func=cmd_classes)

    s = sub.add_parser("search", help="minimum-metric cyclic design")
    s.add_argument("--t", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--grid", action="store_true", help="all (t, k) with 15-30%% control plots")
    s.add_argument("--t-min", type=int, default=10)
    s.add_argument("--t-max", type=int, default=30)
    s.add_argument("--k-min", type=int, default=3)
    s.add_argument("--k-max", type=int, default=9)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("randomize", help="permute rows and columns by a random group element pair")
    s.add_argument("design")
    s.add_argument("--group", default="affine", help="affine | file:<generators.json>")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_randomize)

    s = sub.add_parser("spacefill", help="phi_2 distribution under randomization")
    s.add_argument("design")
    s.add_argument("--group", default="affine", help="affine | file:<generators.json>")
    s.add_argument("--mode", choices=["exhaustive", "sample"], default="exhaustive")
    s.add_argument("--n", type=int, help="number of draws in sample mode")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--force", action="store_true", help="allow exhaustive runs above 10^6 designs")
    s.add_argument("--raw", help="write every phi_2 value to this CSV file")
    s.add_argument("--show", action="store_true", help="print the control layout")
    s.set_defaults(func=cmd_spacefill)

    s = sub.add_parser("catalog", help="recompute a reference table (T1..T6)")
    s.add_argument("table", choices=[*catalog.TABLES, *(t.lower() for t in catalog.TABLES)])
    s.add_argument("--csv", action="store_true")
    s.add_argument("--sample", type=int, help="T2 only: sample this many pairs instead of all")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InvalidDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for r, c in exc.report.cells:
            print(f"  cell ({r}, {c})", file=sys.stderr)
        return EXIT_INVALID
    except DesignParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RefusedComputation, GroupTooLarge) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (DesignError, GroupError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
