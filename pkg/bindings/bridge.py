"""Stdio bridge: the foreign-function boundary under the TypeScript API.

Speaks newline-delimited JSON on stdin/stdout.  Each request carries an
``id``, an ``op`` (load, build, save, close) and its arguments; each
response echoes the id with either a result or a located error.  Open
datasets live here, keyed by integer handles, so every byte that
reaches disk is produced by the core codecs; the host side only ever
sees plain scalars and flat vectors.

Wire form of values is type-directed by the schema slot:

* short/long/character: JSON numbers
* long64: decimal strings (JSON numbers lose precision past 2^53)
* float/double: JSON numbers, with "nan"/"inf"/"-inf"/"-0" for the
  values JSON cannot spell (NaN payloads canonicalize at this boundary)
* string: JSON strings
"""

from __future__ import annotations

import json
import math
import sys

from sdds_toolkit import (
    ArrayDef,
    ArrayInstance,
    DataError,
    DataType,
    Dataset,
    Endian,
    FieldDef,
    HeaderError,
    Mode,
    Page,
    Schema,
    SddsError,
    Value,
    load as load_file,
    save as save_file,
    validate_page,
    validate_schema,
)

_TYPES = {t.value: t for t in DataType}

_handles: dict[int, Dataset] = {}
_next_handle = 1


class BridgeError(Exception):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


def _value_out(value: Value):
    t = value.type
    if t is DataType.LONG64:
        return str(value.data)
    if t.is_float:
        x = value.data
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return value.data


def _value_in(raw, dtype: DataType) -> Value:
    if dtype is DataType.STRING:
        if not isinstance(raw, str):
            raise ValueError(f"expected a string, got {raw!r}")
        return Value(dtype, raw)
    if dtype is DataType.CHARACTER:
        if isinstance(raw, str):
            if len(raw) != 1 or ord(raw) > 255:
                raise ValueError(f"character must be one byte, got {raw!r}")
            return Value(dtype, ord(raw))
        if isinstance(raw, int) and not isinstance(raw, bool):
            return Value(dtype, raw)
        raise ValueError(f"expected a byte value, got {raw!r}")
    if dtype.is_integer:
        if isinstance(raw, str):
            raw = int(raw)
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ValueError(f"expected an integer, got {raw!r}")
        return Value(dtype, raw)
    # float / double
    if isinstance(raw, str):
        specials = {"nan": math.nan, "inf": math.inf, "-inf": -math.inf,
                    "-0": -0.0}
        if raw not in specials:
            raise ValueError(f"expected a number, got {raw!r}")
        return Value(dtype, specials[raw])
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValueError(f"expected a number, got {raw!r}")
    return Value(dtype, float(raw))


def _field_out(fd: FieldDef, extra=None):
    out = {"name": fd.name, "type": fd.type.value}
    if fd.units is not None:
        out["units"] = fd.units
    if fd.description is not None:
        out["description"] = fd.description
    if extra:
        out.update(extra)
    return out


def _schema_out(schema: Schema):
    out = {
        "parameters": [_field_out(fd) for fd in schema.parameters],
        "arrays": [_field_out(ad.base, {"dimensions": ad.dim_count})
                   for ad in schema.arrays],
        "columns": [_field_out(fd) for fd in schema.columns],
        "mode": schema.mode.value,
        "endian": schema.endian.value,
    }
    if schema.description_text is not None:
        out["description"] = schema.description_text
    if schema.description_contents is not None:
        out["descriptionContents"] = schema.description_contents
    return out


def _page_out(page: Page):
    return {
        "parameters": [_value_out(v) for v in page.parameter_values],
        "arrays": [{"dims": list(inst.dims),
                    "elements": [_value_out(v) for v in inst.elements]}
                   for inst in page.array_values],
        "columns": [[_value_out(v) for v in vector]
                    for vector in page.column_data],
        "rowCount": page.row_count,
    }


def _dataset_out(handle: int, ds: Dataset):
    return {"handle": handle,
            "schema": _schema_out(ds.schema),
            "pages": [_page_out(p) for p in ds.pages]}


def _field_in(raw, what) -> FieldDef:
    try:
        name = raw["name"]
        type_token = raw["type"]
    except (TypeError, KeyError):
        raise BridgeError(f"{what}: every field needs 'name' and 'type'")
    if type_token not in _TYPES:
        raise BridgeError(f"{what} '{name}': unknown type '{type_token}'")
    return FieldDef(name=name, type=_TYPES[type_token],
                    units=raw.get("units"), description=raw.get("description"))


def _schema_in(raw) -> Schema:
    mode = raw.get("mode", "ascii")
    endian = raw.get("endian", "little")
    if mode not in (m.value for m in Mode):
        raise BridgeError(f"unknown mode '{mode}'")
    if endian not in (e.value for e in Endian):
        raise BridgeError(f"unknown endian '{endian}'")
    schema = Schema(
        description_text=raw.get("description"),
        description_contents=raw.get("descriptionContents"),
        parameters=tuple(_field_in(f, "parameter")
                         for f in raw.get("parameters", [])),
        arrays=tuple(ArrayDef(base=_field_in(f, "array"),
                              dim_count=int(f.get("dimensions", 1)))
                     for f in raw.get("arrays", [])),
        columns=tuple(_field_in(f, "column") for f in raw.get("columns", [])),
        mode=Mode(mode), endian=Endian(endian))
    diags = validate_schema(schema)
    if diags:
        raise BridgeError(diags[0])
    return schema


def _page_in(raw, schema: Schema, page_no: int) -> Page:
    params_raw = raw.get("parameters", [])
    if len(params_raw) != len(schema.parameters):
        raise BridgeError(f"page {page_no}: {len(params_raw)} parameter "
                          f"values for {len(schema.parameters)} parameters")
    parameter_values = []
    for fd, item in zip(schema.parameters, params_raw):
        try:
            parameter_values.append(_value_in(item, fd.type))
        except ValueError as exc:
            raise BridgeError(f"page {page_no}, parameter '{fd.name}': {exc}")

    arrays_raw = raw.get("arrays", [])
    if len(arrays_raw) != len(schema.arrays):
        raise BridgeError(f"page {page_no}: {len(arrays_raw)} array "
                          f"instances for {len(schema.arrays)} arrays")
    array_values = []
    for ad, item in zip(schema.arrays, arrays_raw):
        dims = tuple(int(d) for d in item.get("dims", []))
        elements = []
        for i, el in enumerate(item.get("elements", [])):
            try:
                elements.append(_value_in(el, ad.type))
            except ValueError as exc:
                raise BridgeError(f"page {page_no}, array '{ad.name}', "
                                  f"element {i}: {exc}")
        array_values.append(ArrayInstance(dims=dims, elements=tuple(elements)))

    columns_raw = raw.get("columns", [])
    if len(columns_raw) != len(schema.columns):
        raise BridgeError(f"page {page_no}: {len(columns_raw)} column "
                          f"vectors for {len(schema.columns)} columns")
    column_data = []
    for fd, vector in zip(schema.columns, columns_raw):
        cells = []
        for r, item in enumerate(vector):
            try:
                cells.append(_value_in(item, fd.type))
            except ValueError as exc:
                raise BridgeError(f"page {page_no}, column '{fd.name}', "
                                  f"row {r + 1}: {exc}")
        column_data.append(tuple(cells))

    row_count = raw.get("rowCount")
    if row_count is None:
        row_count = len(column_data[0]) if column_data else 0
    page = Page(parameter_values=tuple(parameter_values),
                array_values=tuple(array_values),
                column_data=tuple(column_data),
                row_count=int(row_count))
    diags = validate_page(schema, page)
    if diags:
        raise BridgeError(f"page {page_no}: {diags[0]}")
    return page


def _register(ds: Dataset):
    global _next_handle
    handle = _next_handle
    _next_handle += 1
    _handles[handle] = ds
    return _dataset_out(handle, ds)


def _get_handle(request) -> tuple[int, Dataset]:
    handle = request.get("handle")
    ds = _handles.get(handle)
    if ds is None:
        raise BridgeError(f"unknown or closed handle {handle!r}")
    return handle, ds


def _op_load(request):
    return _register(load_file(request["path"]))


def _op_build(request):
    schema = _schema_in(request.get("schema", {}))
    pages = tuple(_page_in(p, schema, i + 1)
                  for i, p in enumerate(request.get("pages", [])))
    return _register(Dataset(schema=schema, pages=pages))


def _op_save(request):
    _, ds = _get_handle(request)
    mode = request.get("mode")
    endian = request.get("endian")
    schema = ds.schema.with_encoding(
        Mode(mode) if mode else None, Endian(endian) if endian else None)
    save_file(Dataset(schema=schema, pages=ds.pages), request["path"])
    return {}


def _op_close(request):
    handle, _ = _get_handle(request)
    del _handles[handle]
    return {}


_OPS = {"load": _op_load, "build": _op_build, "save": _op_save,
        "close": _op_close}


def handle_request(request):
    op = request.get("op")
    fn = _OPS.get(op)
    if fn is None:
        raise BridgeError(f"unknown op {op!r}")
    return fn(request)


def main() -> int:
    out = sys.stdout
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        rid = None
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise BridgeError("request must be a JSON object")
            rid = request.get("id")
            response = {"id": rid, "ok": True,
                        "result": handle_request(request)}
        except json.JSONDecodeError as exc:
            response = {"id": None, "ok": False,
                        "error": {"message": f"bad request line: {exc}"}}
        except BridgeError as exc:
            response = {"id": rid, "ok": False,
                        "error": {"message": str(exc), "line": exc.line,
                                  "column": exc.column}}
        except HeaderError as exc:
            diag = exc.diagnostic
            response = {"id": rid, "ok": False,
                        "error": {"message": str(exc), "line": diag.line,
                                  "column": diag.column}}
        except DataError as exc:
            response = {"id": rid, "ok": False,
                        "error": {"message": str(exc), "line": exc.line,
                                  "offset": exc.offset}}
        except (SddsError, OSError, ValueError, KeyError, TypeError) as exc:
            response = {"id": rid, "ok": False,
                        "error": {"message": f"{type(exc).__name__}: {exc}"}}
        out.write(json.dumps(response) + "\n")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
