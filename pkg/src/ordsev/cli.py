"""Command-line front end: ``ordsev describe|chisq|fit|margins|simulate``.

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, assets
from .contingency import chi_square_from_dataset, chi_square_test
from .errors import DataError, EstimationError, OrdsevError, SchemaError
from .inference import report
from .margins import margins_table
from .ologit import FitOptions, fit
from .report import (
    FORMATS,
    contingency_tables,
    crosstab_table,
    dump_fit_archive,
    fit_tables,
    load_fit_archive,
    margins_output,
    render,
    slug,
)
from .schema import crosstab, encode_design, ingest_records, parse_schema, write_records
from .synth import GENERATOR_NAME, CrosstabSpec, parse_generator_spec, simulate, simulate_from_crosstabs, spec_sha256

log = logging.getLogger("ordsev")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(OrdsevError):
    pass


def _read_source(ref: str, what: str) -> str:
    """Text of a file path, or of a bundled asset when ``ref`` names one."""
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    if ref in assets.BUNDLED:
        return assets.read_text(ref)
    raise InputError(f"{what} not found: {ref}")


def _load_schema(args):
    if not args.schema:
        raise InputError("--schema is required")
    return parse_schema(_read_source(args.schema, "schema"))


def _load_dataset(args, schema):
    if not args.records:
        raise InputError("--records is required")
    path = Path(args.records)
    if not path.is_file():
        raise InputError(f"records file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        ds = ingest_records(fh, schema, policy=args.unknown, catch_all=args.catch_all)
    log.info("ingested %d records, %d dropped", len(ds), ds.dropped_count)
    if ds.dropped_count:
        shown = "; ".join(f"row {d.row} column {d.column!r} label {d.label!r}" for d in ds.dropped[:5])
        print(f"warning: dropped {ds.dropped_count} row(s) with labels outside the schema: {shown}", file=sys.stderr)
    return ds


def _write(out: Path, stem: str, fmt: str, table) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.{fmt}"
    path.write_text(render(table, fmt), encoding="utf-8")
    return path


def cmd_describe(args) -> int:
    schema = _load_schema(args)
    ds = _load_dataset(args, schema)
    if ds.is_empty:
        print("warning: dataset is empty; tables contain zeros", file=sys.stderr)
    out = Path(args.out)
    for spec in schema.variables:
        path = _write(out, f"describe_{slug(spec.name)}", args.format, crosstab_table(crosstab(ds, spec.name)))
        log.info("wrote %s", path)
    return EXIT_OK


def _read_count_table(path: Path):
    if not path.is_file():
        raise InputError(f"table file not found: {path}")
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    col_labels = [c.strip() for c in rows[0][1:]]
    row_labels, counts = [], []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != len(col_labels) + 1:
            raise DataError(f"{path}: line {i} has {len(r)} fields, expected {len(col_labels) + 1}")
        row_labels.append(r[0].strip())
        try:
            counts.append([float(x) for x in r[1:]])
        except ValueError:
            raise DataError(f"{path}: line {i} holds a non-numeric count") from None
    return np.array(counts), row_labels, col_labels


def cmd_chisq(args) -> int:
    var_a = args.var_a or "rows"
    var_b = args.var_b or "columns"
    if args.table:
        counts, row_labels, col_labels = _read_count_table(Path(args.table))
        result = chi_square_test(counts, row_labels, col_labels)
    else:
        if not (args.var_a and args.var_b):
            raise InputError("--var-a and --var-b are required unless --table is given")
        if args.var_a == args.var_b:
            raise InputError("--var-a and --var-b must differ")
        schema = _load_schema(args)
        ds = _load_dataset(args, schema)
        result = chi_square_from_dataset(ds, var_a, var_b)
    cells, summary = contingency_tables(result, var_a, var_b)
    out = Path(args.out)
    stem = f"chisq_{slug(var_a)}__{slug(var_b)}"
    _write(out, f"{stem}_cells", args.format, cells)
    _write(out, f"{stem}_summary", args.format, summary)
    print(summary.notes[0])
    return EXIT_OK


def _fit_options(args) -> FitOptions:
    return FitOptions(
        tol_grad=args.tol_grad,
        tol_ll=args.tol_ll,
        max_iter=args.max_iter,
        hessian_fallback=not args.no_hessian_fallback,
    )


def cmd_fit(args) -> int:
    schema = _load_schema(args)
    ds = _load_dataset(args, schema)
    design = encode_design(ds)
    options = _fit_options(args)
    result = fit(design, options)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not result.converged:
        diag = {
            "converged": False,
            "iterations": result.iterations,
            "gradient_norm": result.gradient_norm,
            "log_likelihood": result.log_likelihood,
            "null_log_likelihood": result.null_log_likelihood,
            "max_iter": options.max_iter,
        }
        (out / "fit_diagnostics.json").write_text(json.dumps(diag, indent=2) + "\n", encoding="utf-8")
        print(f"error: fit did not converge in {result.iterations} iteration(s) "
              f"(gradient max-norm {result.gradient_norm:.3g})", file=sys.stderr)
        return EXIT_NUMERIC
    rep = report(result, design.labels)
    coef, summary = fit_tables(rep)
    _write(out, "fit_report", args.format, coef)
    _write(out, "fit_summary", args.format, summary)
    (out / "fit_archive.json").write_text(
        dump_fit_archive(result, schema.sha256(), schema.outcome, options), encoding="utf-8"
    )
    for note in summary.notes:
        print(note)
    return EXIT_OK


def cmd_margins(args) -> int:
    if not args.archive:
        raise InputError("--archive is required")
    path = Path(args.archive)
    if not path.is_file():
        raise InputError(f"fit archive not found: {path}")
    fitted, doc = load_fit_archive(path.read_text(encoding="utf-8"))
    schema = _load_schema(args)
    if doc["schema_sha256"] != schema.sha256():
        raise InputError("schema does not match the one the fit archive was produced with (hash mismatch)")
    ds = _load_dataset(args, schema)
    design = encode_design(ds)
    if tuple(design.labels) != tuple(fitted.labels):
        raise InputError("design columns do not match the fit archive")
    table = margins_table(fitted, design, schema.outcome)
    _write(Path(args.out), "margins", args.format, margins_output(table, fitted.params.beta))
    return EXIT_OK


def cmd_simulate(args) -> int:
    text = _read_source(args.spec, "generator spec")
    spec = parse_generator_spec(text)
    if isinstance(spec, CrosstabSpec):
        if args.n is not None:
            raise InputError("--n cannot be used with a crosstab spec; its size is fixed by the counts")
        if args.seed is not None:
            spec = CrosstabSpec(spec.schema, spec.counts, args.seed)
        ds = simulate_from_crosstabs(spec)
        kind = "crosstab"
    else:
        if args.n is not None and args.n < 1:
            raise InputError("--n must be at least 1")
        spec = spec.with_overrides(sample_size=args.n, seed=args.seed)
        ds = simulate(spec)
        kind = "ordered_logit"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    write_records(ds, buf)
    (out / "records.csv").write_text(buf.getvalue(), encoding="utf-8")
    provenance = {
        "generator": GENERATOR_NAME,
        "kind": kind,
        "numpy_version": np.__version__,
        "n": len(ds),
        "seed": int(spec.seed),
        "spec_sha256": spec_sha256(text),
        "schema_sha256": ds.schema.sha256(),
    }
    (out / "records.provenance.json").write_text(json.dumps(provenance, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d records to %s", len(ds), out / "records.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordsev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=FORMATS, default="md")
    common.add_argument("-v", "--verbose", action="count", default=0)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--records", help="records CSV")
    data.add_argument("--schema", help="schema JSON path or bundled name (table3_schema, table4_schema)")
    data.add_argument("--unknown", choices=("error", "drop", "map"), default="error",
                      help="handling of labels not in the schema")
    data.add_argument("--catch-all", default="Other", help="category used by --unknown map")

    p = sub.add_parser("describe", parents=[common, data], help="cross-tabulate every variable by severity")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("chisq", parents=[common, data], help="Pearson chi-square test between two variables")
    p.add_argument("--var-a")
    p.add_argument("--var-b")
    p.add_argument("--table", help="pre-tabulated count matrix CSV instead of records")
    p.set_defaults(func=cmd_chisq)

    p = sub.add_parser("fit", parents=[common, data], help="fit the ordered logit model")
    p.add_argument("--tol-grad", type=float, default=1e-6)
    p.add_argument("--tol-ll", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--no-hessian-fallback", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("margins", parents=[common, data], help="average marginal effects from a fit archive")
    p.add_argument("--archive", help="fit_archive.json written by 'fit'")
    p.set_defaults(func=cmd_margins)

    p = sub.add_parser("simulate", parents=[common], help="generate synthetic records")
    p.add_argument("--spec", default="table4_dgp", help="generator spec path or bundled name")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.func(args)
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OrdsevError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
