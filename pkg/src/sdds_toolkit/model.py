"""Core data model for self-describing dataset files.

A file is described entirely by its :class:`Schema`: ordered parameter,
array and column definitions plus the data mode (``ascii``/``binary``)
and, for binary files, the declared byte order.  The data that follows
the header is a sequence of :class:`Page` records, each holding one
value per parameter, one :class:`ArrayInstance` per array definition,
and a table of equal-length column vectors.

All types here are immutable after construction and safe to share
across threads.  Validation is split in two:

* ``Value`` construction rejects impossible states outright (an
  out-of-range short, a two-character "character").
* :func:`validate_schema` / :func:`validate_page` never raise; they
  return one diagnostic string per violation so callers can report
  every problem in a file at once.
"""

from __future__ import annotations

import enum
import math
import re
import struct
from dataclasses import dataclass, replace

__all__ = [
    "DataType",
    "Mode",
    "Endian",
    "FieldDef",
    "ArrayDef",
    "Schema",
    "Value",
    "ArrayInstance",
    "Page",
    "Dataset",
    "validate_schema",
    "validate_page",
    "find_field",
    "values_match",
    "pages_match",
    "datasets_match",
    "INT32_MAX",
]

INT32_MAX = 2**31 - 1

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.:]*\Z")

MAX_ARRAY_DIMS = 8


class DataType(enum.Enum):
    """The seven value types of the protocol."""

    SHORT = "short"          # int16
    LONG = "long"            # int32
    LONG64 = "long64"        # int64
    FLOAT = "float"          # IEEE-754 binary32
    DOUBLE = "double"        # IEEE-754 binary64
    STRING = "string"        # length-prefixed UTF-8
    CHARACTER = "character"  # one byte, 0-255

    @property
    def token(self) -> str:
        return self.value

    @property
    def byte_width(self) -> int | None:
        """Fixed binary width in bytes, or None for strings."""
        return _BYTE_WIDTHS[self]

    @property
    def is_integer(self) -> bool:
        return self in (DataType.SHORT, DataType.LONG, DataType.LONG64)

    @property
    def is_float(self) -> bool:
        return self in (DataType.FLOAT, DataType.DOUBLE)

    @property
    def is_numeric(self) -> bool:
        return self is not DataType.STRING


_BYTE_WIDTHS = {
    DataType.SHORT: 2,
    DataType.LONG: 4,
    DataType.LONG64: 8,
    DataType.FLOAT: 4,
    DataType.DOUBLE: 8,
    DataType.STRING: None,
    DataType.CHARACTER: 1,
}

INT_RANGES = {
    DataType.SHORT: (-(2**15), 2**15 - 1),
    DataType.LONG: (-(2**31), 2**31 - 1),
    DataType.LONG64: (-(2**63), 2**63 - 1),
}

TYPE_TOKENS = {t.value: t for t in DataType}


class Mode(enum.Enum):
    ASCII = "ascii"
    BINARY = "binary"

    @property
    def token(self) -> str:
        return self.value


class Endian(enum.Enum):
    LITTLE = "little"
    BIG = "big"

    @property
    def token(self) -> str:
        return self.value


def _snap_float32(x: float) -> float:
    """Round a Python float to the nearest binary32 value."""
    return struct.unpack("<f", struct.pack("<f", x))[0]


@dataclass(frozen=True)
class Value:
    """A tagged scalar.

    ``data`` holds an int for the integer types and ``character``
    (byte value 0-255), a float for the float types, and a str for
    strings.  ``float`` data is snapped to binary32 on construction so
    a Value never claims more precision than its type can store.

    ``nan_bits`` keeps the exact IEEE bit pattern of a NaN decoded from
    binary input; re-encoding copies those bytes verbatim, so binary
    round trips preserve NaN payloads that Python's float type would
    silently quiet.
    """

    type: DataType
    data: int | float | str
    nan_bits: int | None = None

    def __post_init__(self) -> None:
        t, d = self.type, self.data
        if t.is_integer:
            if isinstance(d, bool) or not isinstance(d, int):
                raise ValueError(f"{t.token} value must be an int, got {d!r}")
            lo, hi = INT_RANGES[t]
            if not lo <= d <= hi:
                raise ValueError(f"{t.token} value {d} out of range {lo}..{hi}")
        elif t is DataType.CHARACTER:
            if isinstance(d, bool) or not isinstance(d, int):
                raise ValueError(f"character value must be an int, got {d!r}")
            if not 0 <= d <= 255:
                raise ValueError(f"character value {d} out of range 0..255")
        elif t is DataType.STRING:
            if not isinstance(d, str):
                raise ValueError(f"string value must be a str, got {d!r}")
        else:
            if isinstance(d, bool) or not isinstance(d, (int, float)):
                raise ValueError(f"{t.token} value must be a float, got {d!r}")
            d = float(d)
            if t is DataType.FLOAT:
                d = _snap_float32(d)
            object.__setattr__(self, "data", d)
            if self.nan_bits is not None and not math.isnan(d):
                object.__setattr__(self, "nan_bits", None)
        if not self.type.is_float and self.nan_bits is not None:
            object.__setattr__(self, "nan_bits", None)

    def bit_pattern(self) -> int:
        """Exact IEEE bit pattern for float-typed values."""
        if not self.type.is_float:
            raise TypeError(f"bit_pattern is only defined for floats, not {self.type.token}")
        if self.nan_bits is not None:
            return self.nan_bits
        code = "<f" if self.type is DataType.FLOAT else "<d"
        return int.from_bytes(struct.pack(code, self.data), "little")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Value):
            return NotImplemented
        if self.type is not other.type:
            return False
        if self.type.is_float:
            return self.bit_pattern() == other.bit_pattern()
        return self.data == other.data

    def __hash__(self) -> int:
        key = self.bit_pattern() if self.type.is_float else self.data
        return hash((self.type, key))


@dataclass(frozen=True)
class FieldDef:
    """One named, typed slot in a schema category."""

    name: str
    type: DataType
    units: str | None = None
    description: str | None = None


@dataclass(frozen=True)
class ArrayDef:
    """An array definition: a field plus its number of dimensions."""

    base: FieldDef
    dim_count: int = 1

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def type(self) -> DataType:
        return self.base.type


def _as_tuple(items):
    return items if isinstance(items, tuple) else tuple(items)


@dataclass(frozen=True)
class Schema:
    """The self-description: what every page of a file contains."""

    description_text: str | None = None
    description_contents: str | None = None
    parameters: tuple[FieldDef, ...] = ()
    arrays: tuple[ArrayDef, ...] = ()
    columns: tuple[FieldDef, ...] = ()
    mode: Mode = Mode.ASCII
    endian: Endian = Endian.LITTLE

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", _as_tuple(self.parameters))
        object.__setattr__(self, "arrays", _as_tuple(self.arrays))
        object.__setattr__(self, "columns", _as_tuple(self.columns))

    def with_encoding(self, mode: Mode | None = None,
                      endian: Endian | None = None) -> "Schema":
        return replace(self, mode=mode or self.mode, endian=endian or self.endian)


@dataclass(frozen=True)
class ArrayInstance:
    """One page's worth of one array: its shape plus the elements in
    row-major order."""

    dims: tuple[int, ...]
    elements: tuple[Value, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", _as_tuple(self.dims))
        object.__setattr__(self, "elements", _as_tuple(self.elements))


@dataclass(frozen=True)
class Page:
    """One record of the schema."""

    parameter_values: tuple[Value, ...] = ()
    array_values: tuple[ArrayInstance, ...] = ()
    column_data: tuple[tuple[Value, ...], ...] = ()
    row_count: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameter_values", _as_tuple(self.parameter_values))
        object.__setattr__(self, "array_values", _as_tuple(self.array_values))
        object.__setattr__(self, "column_data",
                           tuple(_as_tuple(col) for col in self.column_data))

    @classmethod
    def from_columns(cls, column_data, parameter_values=(), array_values=()) -> "Page":
        """Build a page, inferring row_count from the first column."""
        cols = tuple(tuple(c) for c in column_data)
        rows = len(cols[0]) if cols else 0
        return cls(parameter_values=tuple(parameter_values),
                   array_values=tuple(array_values),
                   column_data=cols,
                   row_count=rows)


@dataclass(frozen=True)
class Dataset:
    """A schema plus the ordered pages that conform to it."""

    schema: Schema
    pages: tuple[Page, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pages", _as_tuple(self.pages))


_CATEGORIES = ("parameter", "array", "column")


def _defs_of(schema: Schema, category: str):
    if category == "parameter":
        return schema.parameters
    if category == "array":
        return schema.arrays
    if category == "column":
        return schema.columns
    raise ValueError(f"unknown category {category!r}")


def _field_of(definition) -> FieldDef:
    return definition.base if isinstance(definition, ArrayDef) else definition


def _header_text_ok(text: str) -> bool:
    # Header bytes must be pure ASCII; \n and \t are the only control
    # characters the header escape set can represent.
    return all((0x20 <= ord(c) <= 0x7E) or c in "\n\t" for c in text)


def validate_schema(schema: Schema) -> list[str]:
    """Return one diagnostic per violation; an empty list means valid."""
    diags: list[str] = []
    for category in _CATEGORIES:
        seen: set[str] = set()
        for definition in _defs_of(schema, category):
            fd = _field_of(definition)
            if not IDENTIFIER_RE.match(fd.name):
                diags.append(f"{category} name {fd.name!r} is not a valid identifier")
            if fd.name in seen:
                diags.append(f"duplicate {category} name '{fd.name}'")
            seen.add(fd.name)
            for label, text in (("units", fd.units), ("description", fd.description)):
                if text is not None and not _header_text_ok(text):
                    diags.append(
                        f"{category} '{fd.name}': {label} contains characters "
                        f"the header cannot represent")
    for arr in schema.arrays:
        if not 1 <= arr.dim_count <= MAX_ARRAY_DIMS:
            diags.append(f"array '{arr.name}': dim_count {arr.dim_count} "
                         f"out of range 1..{MAX_ARRAY_DIMS}")
    for label, text in (("description text", schema.description_text),
                        ("description contents", schema.description_contents)):
        if text is not None and not _header_text_ok(text):
            diags.append(f"{label} contains characters the header cannot represent")
    return diags


def validate_page(schema: Schema, page: Page) -> list[str]:
    """Check a page against its schema; never raises."""
    diags: list[str] = []

    if len(page.parameter_values) != len(schema.parameters):
        diags.append(f"page has {len(page.parameter_values)} parameter values, "
                     f"schema declares {len(schema.parameters)}")
    else:
        for fd, value in zip(schema.parameters, page.parameter_values):
            if value.type is not fd.type:
                diags.append(f"parameter '{fd.name}': value is {value.type.token}, "
                             f"expected {fd.type.token}")

    if len(page.array_values) != len(schema.arrays):
        diags.append(f"page has {len(page.array_values)} array instances, "
                     f"schema declares {len(schema.arrays)}")
    else:
        for ad, inst in zip(schema.arrays, page.array_values):
            if len(inst.dims) != ad.dim_count:
                diags.append(f"array '{ad.name}' has {len(inst.dims)} dimensions, "
                             f"expected {ad.dim_count}")
                continue
            if any(d < 0 for d in inst.dims):
                diags.append(f"array '{ad.name}' has a negative dimension")
                continue
            expected = math.prod(inst.dims)
            if len(inst.elements) != expected:
                diags.append(f"array '{ad.name}' has {len(inst.elements)} elements, "
                             f"expected {expected}")
            for value in inst.elements:
                if value.type is not ad.type:
                    diags.append(f"array '{ad.name}': element is {value.type.token}, "
                                 f"expected {ad.type.token}")
                    break

    if not 0 <= page.row_count <= INT32_MAX:
        diags.append(f"row_count {page.row_count} out of range 0..{INT32_MAX}")

    if len(page.column_data) != len(schema.columns):
        diags.append(f"page has {len(page.column_data)} column vectors, "
                     f"schema declares {len(schema.columns)}")
    else:
        for fd, vector in zip(schema.columns, page.column_data):
            if len(vector) != page.row_count:
                diags.append(f"column '{fd.name}' length {len(vector)} "
                             f"!= row_count {page.row_count}")
            for value in vector:
                if value.type is not fd.type:
                    diags.append(f"column '{fd.name}': value is {value.type.token}, "
                                 f"expected {fd.type.token}")
                    break
    return diags


def find_field(schema: Schema, category: str, name: str) -> int | None:
    """Index of the definition named exactly ``name`` in ``category``."""
    for i, definition in enumerate(_defs_of(schema, category)):
        if _field_of(definition).name == name:
            return i
    return None


def values_match(a: Value, b: Value, *, nan_payload_sensitive: bool = True) -> bool:
    """Value equality; optionally treat all NaNs of one type as equal.

    ASCII emission canonicalizes NaN payloads, so comparisons across an
    ASCII trip use ``nan_payload_sensitive=False``.
    """
    if a.type is not b.type:
        return False
    if a.type.is_float and not nan_payload_sensitive:
        if isinstance(a.data, float) and isinstance(b.data, float):
            if math.isnan(a.data) and math.isnan(b.data):
                return True
    return a == b


def pages_match(a: Page, b: Page, *, nan_payload_sensitive: bool = True) -> bool:
    if a.row_count != b.row_count:
        return False
    if len(a.parameter_values) != len(b.parameter_values):
        return False
    if len(a.array_values) != len(b.array_values):
        return False
    if len(a.column_data) != len(b.column_data):
        return False
    kw = {"nan_payload_sensitive": nan_payload_sensitive}
    for x, y in zip(a.parameter_values, b.parameter_values):
        if not values_match(x, y, **kw):
            return False
    for ia, ib in zip(a.array_values, b.array_values):
        if ia.dims != ib.dims or len(ia.elements) != len(ib.elements):
            return False
        for x, y in zip(ia.elements, ib.elements):
            if not values_match(x, y, **kw):
                return False
    for ca, cb in zip(a.column_data, b.column_data):
        if len(ca) != len(cb):
            return False
        for x, y in zip(ca, cb):
            if not values_match(x, y, **kw):
                return False
    return True


def datasets_match(a: Dataset, b: Dataset, *, nan_payload_sensitive: bool = True,
                   compare_encoding: bool = False) -> bool:
    """Semantic dataset equality: same definitions, same values.

    ``compare_encoding`` additionally requires identical mode/endian.
    """
    sa, sb = a.schema, b.schema
    if (sa.description_text, sa.description_contents) != \
            (sb.description_text, sb.description_contents):
        return False
    if sa.parameters != sb.parameters or sa.arrays != sb.arrays \
            or sa.columns != sb.columns:
        return False
    if compare_encoding and (sa.mode, sa.endian) != (sb.mode, sb.endian):
        return False
    if len(a.pages) != len(b.pages):
        return False
    return all(pages_match(pa, pb, nan_payload_sensitive=nan_payload_sensitive)
               for pa, pb in zip(a.pages, b.pages))
