"""The ``sdds`` command: a multiplexed postprocessing toolkit.

Subcommands: query, print, convert, check, filter, derive, combine,
plot.  Every subcommand exits 0 on success, 1 on a data or validation
error, and 2 on a usage error.  Diagnostics go to stderr, data to
stdout.  ``-`` as a path means the standard streams (ASCII-mode data
only; binary data needs a real file).
"""

from __future__ import annotations

import argparse
import math
import sys

from . import ascii as ascii_codec
from . import expr as expr_mod
from .errors import DataError, ExprError, HeaderError, SddsError
from .files import read_dataset, write_dataset
from .model import (
    DataType,
    Dataset,
    Endian,
    FieldDef,
    Mode,
    Page,
    Schema,
    TYPE_TOKENS,
    Value,
    find_field,
    validate_page,
    validate_schema,
)
from .plot import PlotSpec, render_svg

__all__ = ["main"]


class _UsageError(Exception):
    """Malformed option values; maps to exit code 2."""


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise SddsError(f"{path}: {exc.strerror or exc}") from None


def _write_output(path: str, data: bytes, mode: Mode) -> None:
    if path == "-":
        if mode is Mode.BINARY:
            raise SddsError("binary data cannot be written to standard output; "
                            "use a file path")
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise SddsError(f"{path}: {exc.strerror or exc}") from None


def _load(path: str) -> Dataset:
    try:
        return read_dataset(_read_input(path))
    except (HeaderError, DataError) as exc:
        raise SddsError(f"{path}: {exc}") from None


def _mode_arg(token: str | None) -> Mode | None:
    return None if token is None else Mode(token)


def _endian_arg(token: str | None) -> Endian | None:
    return None if token is None else Endian(token)


# ---------------------------------------------------------------- query


def cmd_query(args) -> int:
    ds = _load(args.file)
    schema = ds.schema
    out = sys.stdout
    print(f"mode: {schema.mode.token}", file=out)
    print(f"endian: {schema.endian.token}", file=out)
    for fd in schema.parameters:
        print(_describe("parameter", fd.name, fd.type, fd.units), file=out)
    for ad in schema.arrays:
        print(_describe("array", ad.name, ad.type, ad.base.units), file=out)
    for fd in schema.columns:
        print(_describe("column", fd.name, fd.type, fd.units), file=out)
    print(f"pages: {len(ds.pages)}", file=out)
    for i, page in enumerate(ds.pages, start=1):
        print(f"page {i}: {page.row_count} rows", file=out)
    return 0


def _describe(kind: str, name: str, dtype: DataType, units: str | None) -> str:
    parts = [kind, name, dtype.token]
    if units:
        parts.append(units)
    return " ".join(parts)


# ---------------------------------------------------------------- print


def _select_columns(schema: Schema, spec: str | None) -> list[int]:
    if spec is None:
        return list(range(len(schema.columns)))
    indices = []
    for name in spec.split(","):
        name = name.strip()
        idx = find_field(schema, "column", name)
        if idx is None:
            raise SddsError(f"unknown column '{name}'")
        indices.append(idx)
    return indices


def _select_page(ds: Dataset, number: int) -> Page:
    if not 1 <= number <= len(ds.pages):
        raise SddsError(f"page {number} of {len(ds.pages)}")
    return ds.pages[number - 1]


def cmd_print(args) -> int:
    ds = _load(args.file)
    indices = _select_columns(ds.schema, args.columns)
    if args.page is not None:
        selection = [(args.page, _select_page(ds, args.page))]
    else:
        selection = list(enumerate(ds.pages, start=1))
    label = args.page is None and len(selection) > 1
    for number, page in selection:
        if label:
            print(f"*** page {number}")
        _print_table(ds.schema, page, indices)
    return 0


def _print_table(schema: Schema, page: Page, indices: list[int]) -> None:
    if not indices:
        return
    names = [schema.columns[i].name for i in indices]
    units = [schema.columns[i].units or "" for i in indices]
    rows = [[ascii_codec.format_value(page.column_data[i][r]) for i in indices]
            for r in range(page.row_count)]
    table = [names] + ([units] if any(units) else []) + rows
    widths = [max(len(row[c]) for row in table) for c in range(len(indices))]
    for row in table:
        print("  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip())


# -------------------------------------------------------------- convert


def cmd_convert(args) -> int:
    ds = _load(args.input)
    schema = ds.schema.with_encoding(_mode_arg(args.mode), _endian_arg(args.endian))
    out = Dataset(schema=schema, pages=ds.pages)
    _write_output(args.output, write_dataset(out), schema.mode)
    return 0


# ---------------------------------------------------------------- check


def cmd_check(args) -> int:
    try:
        data = _read_input(args.file)
    except SddsError as exc:
        print(f"sdds check: {exc}", file=sys.stderr)
        return 1
    problems = 0
    try:
        ds = read_dataset(data)
    except (HeaderError, DataError) as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 1
    for diag in validate_schema(ds.schema):
        print(f"{args.file}: {diag}", file=sys.stderr)
        problems += 1
    for i, page in enumerate(ds.pages, start=1):
        for diag in validate_page(ds.schema, page):
            print(f"{args.file}: page {i}: {diag}", file=sys.stderr)
            problems += 1
    return 1 if problems else 0


# --------------------------------------------------------------- filter


def _compile_logical(source: str, schema: Schema):
    ast = expr_mod.parse_expr(source)
    kind = expr_mod.type_check(ast, schema)
    if kind is not expr_mod.ExprType.LOGICAL:
        raise SddsError(f"filter expression must be logical, got {kind.value}")
    return ast


def cmd_filter(args) -> int:
    ds = _load(args.input)
    try:
        ast = _compile_logical(args.where, ds.schema)
    except ExprError as exc:
        raise SddsError(f"--where: {exc}") from None
    pages = []
    for page in ds.pages:
        keep = [r for r in range(page.row_count)
                if expr_mod.eval_expr(ast, ds.schema, page, r)]
        pages.append(Page(
            parameter_values=page.parameter_values,
            array_values=page.array_values,
            column_data=tuple(tuple(vector[r] for r in keep)
                              for vector in page.column_data),
            row_count=len(keep)))
    out = Dataset(schema=ds.schema, pages=tuple(pages))
    _write_output(args.output, write_dataset(out), ds.schema.mode)
    return 0


# --------------------------------------------------------------- derive


def _parse_column_spec(spec: str) -> tuple[str, str, DataType]:
    name, eq, rest = spec.partition("=")
    if not eq:
        raise _UsageError(f"--column must look like name=EXPR:type, got {spec!r}")
    source, colon, type_token = rest.rpartition(":")
    if not colon or type_token not in TYPE_TOKENS:
        raise _UsageError(f"--column needs a ':type' suffix with one of: "
                          f"{', '.join(sorted(TYPE_TOKENS))}")
    return name, source, TYPE_TOKENS[type_token]


def _convert_result(result, dtype: DataType, page_no: int, row: int) -> Value:
    if dtype is DataType.STRING:
        return Value(DataType.STRING, result)
    if dtype is DataType.DOUBLE or dtype is DataType.FLOAT:
        return Value(dtype, result)
    # integer targets round half to even
    if not math.isfinite(result):
        raise SddsError(f"page {page_no}, row {row + 1}: value {result!r} "
                        f"does not convert to {dtype.token}")
    n = round(result)
    try:
        return Value(dtype, n)
    except ValueError:
        raise SddsError(f"page {page_no}, row {row + 1}: value {result!r} "
                        f"overflows {dtype.token}") from None


def cmd_derive(args) -> int:
    name, source, dtype = _parse_column_spec(args.column)
    ds = _load(args.input)
    if find_field(ds.schema, "column", name) is not None:
        raise SddsError(f"column '{name}' already exists")

    try:
        ast = expr_mod.parse_expr(source)
        kind = expr_mod.type_check(ast, ds.schema)
    except ExprError as exc:
        raise SddsError(f"--column: {exc}") from None
    if dtype is DataType.STRING:
        if kind is not expr_mod.ExprType.TEXT:
            raise SddsError("a string column needs a text expression")
    elif kind is not expr_mod.ExprType.NUMERIC:
        raise SddsError(f"a {dtype.token} column needs a numeric expression, "
                        f"got {kind.value}")

    new_field = FieldDef(name=name, type=dtype)
    schema = Schema(description_text=ds.schema.description_text,
                    description_contents=ds.schema.description_contents,
                    parameters=ds.schema.parameters,
                    arrays=ds.schema.arrays,
                    columns=ds.schema.columns + (new_field,),
                    mode=ds.schema.mode,
                    endian=ds.schema.endian)
    diags = validate_schema(schema)
    if diags:
        raise SddsError(diags[0])

    pages = []
    for page_no, page in enumerate(ds.pages, start=1):
        derived = tuple(
            _convert_result(expr_mod.eval_expr(ast, ds.schema, page, r),
                            dtype, page_no, r)
            for r in range(page.row_count))
        pages.append(Page(parameter_values=page.parameter_values,
                          array_values=page.array_values,
                          column_data=page.column_data + (derived,),
                          row_count=page.row_count))
    out = Dataset(schema=schema, pages=tuple(pages))
    _write_output(args.output, write_dataset(out), schema.mode)
    return 0


# -------------------------------------------------------------- combine


def _schema_mismatch(first_path: str, first: Schema, path: str,
                     other: Schema) -> str | None:
    for category, defs_a, defs_b in (
            ("parameter", first.parameters, other.parameters),
            ("array", first.arrays, other.arrays),
            ("column", first.columns, other.columns)):
        if len(defs_a) != len(defs_b):
            return (f"{path}: has {len(defs_b)} {category}s, "
                    f"{first_path} has {len(defs_a)}")
        for da, db in zip(defs_a, defs_b):
            if da != db:
                name = da.name if hasattr(da, "name") else da.base.name
                return f"{path}: {category} '{name}' differs from {first_path}"
    return None


def cmd_combine(args) -> int:
    first = _load(args.inputs[0])
    pages = list(first.pages)
    for path in args.inputs[1:]:
        ds = _load(path)
        mismatch = _schema_mismatch(args.inputs[0], first.schema, path, ds.schema)
        if mismatch:
            raise SddsError(mismatch)
        pages.extend(ds.pages)
    schema = first.schema.with_encoding(_mode_arg(args.mode),
                                        _endian_arg(args.endian))
    out = Dataset(schema=schema, pages=tuple(pages))
    _write_output(args.output, write_dataset(out), schema.mode)
    return 0


# ----------------------------------------------------------------- plot


def _numeric_column(ds: Dataset, name: str, pages: list[Page]) -> list[float]:
    idx = find_field(ds.schema, "column", name)
    if idx is None:
        raise SddsError(f"unknown column '{name}'")
    fd = ds.schema.columns[idx]
    if not fd.type.is_numeric:
        raise SddsError(f"column '{name}' is not numeric")
    values: list[float] = []
    for page in pages:
        values.extend(float(v.data) for v in page.column_data[idx])
    return values


def _axis_label(schema: Schema, name: str) -> str:
    idx = find_field(schema, "column", name)
    units = schema.columns[idx].units if idx is not None else None
    return f"{name} [{units}]" if units else name


def cmd_plot(args) -> int:
    ds = _load(args.file)
    if args.page is not None:
        pages = [_select_page(ds, args.page)]
    else:
        pages = list(ds.pages)
    xs = _numeric_column(ds, args.x, pages)
    ys = _numeric_column(ds, args.y, pages)
    if args.z is not None:
        zs = _numeric_column(ds, args.z, pages)
        points = tuple(zip(xs, ys, zs))
    else:
        points = tuple(zip(xs, ys))
    spec = PlotSpec(points=points,
                    style="line" if args.lines else "scatter",
                    x_label=_axis_label(ds.schema, args.x),
                    y_label=_axis_label(ds.schema, args.y))
    try:
        svg = render_svg(spec)
    except ValueError as exc:
        raise SddsError(str(exc)) from None
    _write_output(args.output, svg, Mode.ASCII)
    return 0


# ----------------------------------------------------------------- main


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdds",
        description="Inspect, convert and postprocess self-describing "
                    "dataset files.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("query", help="describe a file's structure")
    p.add_argument("file")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("print", help="print column data as an aligned table")
    p.add_argument("file")
    p.add_argument("--columns", help="comma-separated column subset, in order")
    p.add_argument("--page", type=int, help="print only this page (1-based)")
    p.set_defaults(func=cmd_print)

    p = sub.add_parser("convert", help="rewrite with a different mode/endianness")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mode", choices=[m.token for m in Mode])
    p.add_argument("--endian", choices=[e.token for e in Endian])
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("check", help="validate a file; exit 0 only if clean")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("filter", help="keep only rows satisfying an expression")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--where", required=True, metavar="EXPR")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("derive", help="append a computed column")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--column", required=True, metavar="NAME=EXPR:TYPE")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("combine", help="concatenate the pages of several files")
    p.add_argument("output")
    p.add_argument("inputs", nargs="+", metavar="input")
    p.add_argument("--mode", choices=[m.token for m in Mode])
    p.add_argument("--endian", choices=[e.token for e in Endian])
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("plot", help="render columns to an SVG plot")
    p.add_argument("file")
    p.add_argument("--x", required=True, metavar="COLUMN")
    p.add_argument("--y", required=True, metavar="COLUMN")
    p.add_argument("--z", metavar="COLUMN", help="third axis: 3-D scatter "
                   "under an orthographic projection")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--page", type=int, help="plot only this page (1-based)")
    p.add_argument("--lines", action="store_true",
                   help="connect points with a polyline")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"sdds {args.command}: {exc}", file=sys.stderr)
        return 2
    except SddsError as exc:
        print(f"sdds {args.command}: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
