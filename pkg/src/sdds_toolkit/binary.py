"""Binary page codec with declared endianness.

Page layout (no padding anywhere):

* int32 row count
* parameter values in declaration order
* per array: ``dim_count`` int32 dimension sizes, then the elements in
  row-major order
* ``row_count`` rows, each holding one value per column in declaration
  order

Fixed-width values use the byte order declared in the header, which is
what lets a file written on one machine be read on any other.  Strings
are an int32 byte length followed by that many UTF-8 bytes.  A stream
that ends exactly on a page boundary is a clean end of data; anything
else mid-page is reported as truncation with the offending byte offset.
"""

from __future__ import annotations

import math
import struct

from .errors import DataError
from .model import (
    ArrayInstance,
    DataType,
    Endian,
    INT32_MAX,
    Page,
    Schema,
    Value,
    validate_page,
)

__all__ = ["BinaryCursor", "decode_value", "encode_value",
           "read_page_binary", "write_page_binary"]

_STRUCT_CODES = {
    DataType.SHORT: "h",
    DataType.LONG: "i",
    DataType.LONG64: "q",
    DataType.FLOAT: "f",
    DataType.DOUBLE: "d",
    DataType.CHARACTER: "B",
}

_STRUCTS = {
    (endian, dtype): struct.Struct(("<" if endian is Endian.LITTLE else ">") + code)
    for endian in Endian
    for dtype, code in _STRUCT_CODES.items()
}


class BinaryCursor:
    """Forward-only reader over an in-memory byte buffer."""

    def __init__(self, data: bytes, endian: Endian, start: int = 0):
        self.data = data
        self.endian = endian
        self.pos = start

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if n > self.remaining:
            raise DataError("truncated page", offset=self.pos)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def read_int32(self) -> int:
        s = _STRUCTS[(self.endian, DataType.LONG)]
        return s.unpack(self.take(4))[0]

    def read_value(self, dtype: DataType) -> Value:
        if dtype is DataType.STRING:
            at = self.pos
            length = self.read_int32()
            if length < 0:
                raise DataError(f"negative string length {length}", offset=at)
            raw = self.take(length)
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise DataError("invalid UTF-8 in string", offset=at) from None
            return Value(DataType.STRING, text)
        raw = self.take(dtype.byte_width)
        data = _STRUCTS[(self.endian, dtype)].unpack(raw)[0]
        if dtype.is_float and math.isnan(data):
            bits = int.from_bytes(raw, self.endian.token)
            return Value(dtype, data, nan_bits=bits)
        return Value(dtype, data)


def decode_value(data: bytes, dtype: DataType, endian: Endian) -> Value:
    """Decode one value from the start of ``data``."""
    return BinaryCursor(data, endian).read_value(dtype)


def encode_value(value: Value, endian: Endian) -> bytes:
    """Encode one value; the exact inverse of :func:`decode_value`."""
    dtype = value.type
    if dtype is DataType.STRING:
        raw = value.data.encode("utf-8")
        if len(raw) > INT32_MAX:
            raise DataError(f"string of {len(raw)} bytes exceeds the "
                            f"int32 length prefix")
        return _STRUCTS[(endian, DataType.LONG)].pack(len(raw)) + raw
    if dtype.is_float and value.nan_bits is not None:
        return value.nan_bits.to_bytes(dtype.byte_width, endian.token)
    return _STRUCTS[(endian, dtype)].pack(value.data)


def read_page_binary(cursor: BinaryCursor, schema: Schema) -> Page | None:
    """Read one page, or return None on a clean end of data."""
    if cursor.remaining == 0:
        return None

    at = cursor.pos
    row_count = cursor.read_int32()
    if row_count < 0:
        raise DataError(f"negative row count {row_count}", offset=at)

    parameter_values = tuple(cursor.read_value(fd.type)
                             for fd in schema.parameters)

    array_values = []
    for ad in schema.arrays:
        dims = []
        for _ in range(ad.dim_count):
            at = cursor.pos
            d = cursor.read_int32()
            if d < 0:
                raise DataError(f"negative array dimension {d}", offset=at)
            dims.append(d)
        count = math.prod(dims)
        width = ad.type.byte_width
        if width is not None and count * width > cursor.remaining:
            raise DataError("truncated page", offset=cursor.pos)
        elements = tuple(cursor.read_value(ad.type) for _ in range(count))
        array_values.append(ArrayInstance(dims=tuple(dims), elements=elements))

    column_types = [fd.type for fd in schema.columns]
    column_data: tuple[tuple[Value, ...], ...]
    if column_types:
        if all(t is not DataType.STRING for t in column_types):
            row_width = sum(t.byte_width for t in column_types)
            if row_count * row_width > cursor.remaining:
                raise DataError("truncated page", offset=cursor.pos)
        cols: list[list[Value]] = [[] for _ in column_types]
        for _ in range(row_count):
            for col, dtype in zip(cols, column_types):
                col.append(cursor.read_value(dtype))
        column_data = tuple(tuple(c) for c in cols)
    else:
        column_data = ()

    return Page(parameter_values=parameter_values,
                array_values=tuple(array_values),
                column_data=column_data,
                row_count=row_count)


def write_page_binary(out, schema: Schema, page: Page) -> int:
    """Append one page to ``out`` (a writable binary stream).

    Returns the number of bytes written.  The page must validate
    against the schema first.
    """
    diags = validate_page(schema, page)
    if diags:
        raise DataError(f"page does not match schema: {diags[0]}")

    endian = schema.endian
    chunks = [_STRUCTS[(endian, DataType.LONG)].pack(page.row_count)]
    for value in page.parameter_values:
        chunks.append(encode_value(value, endian))
    for inst in page.array_values:
        for d in inst.dims:
            chunks.append(_STRUCTS[(endian, DataType.LONG)].pack(d))
        for value in inst.elements:
            chunks.append(encode_value(value, endian))
    for r in range(page.row_count):
        for vector in page.column_data:
            chunks.append(encode_value(vector[r], endian))
    blob = b"".join(chunks)
    out.write(blob)
    return len(blob)
