"""Whole-file reading and writing: header plus page sequence."""

from __future__ import annotations

import io

from .ascii import TokenStream, read_page_ascii, write_page_ascii
from .binary import BinaryCursor, read_page_binary, write_page_binary
from .errors import DataError
from .header import emit_header, parse_header
from .model import Dataset, Mode, Page, Schema

__all__ = ["read_dataset", "write_dataset", "load", "save"]


def _data_lines(data: bytes, data_start: int) -> tuple[list[str], int]:
    """Decode the ASCII-mode data region into lines with the absolute
    line number of the first one."""
    first_line = data.count(b"\n", 0, data_start) + 1
    raw = data[data_start:]
    lines: list[str] = []
    for i, chunk in enumerate(raw.split(b"\n")):
        try:
            lines.append(chunk.decode("utf-8"))
        except UnicodeDecodeError:
            raise DataError("invalid UTF-8 in data", line=first_line + i) from None
    return lines, first_line


def read_dataset(data: bytes) -> Dataset:
    """Parse a complete file image into a Dataset."""
    schema, data_start = parse_header(data)
    pages: list[Page] = []
    if schema.mode is Mode.ASCII:
        lines, first_line = _data_lines(data, data_start)
        stream = TokenStream(lines, first_line)
        while True:
            page = read_page_ascii(stream, schema)
            if page is None:
                break
            pages.append(page)
    else:
        cursor = BinaryCursor(data, schema.endian, start=data_start)
        while True:
            page = read_page_binary(cursor, schema)
            if page is None:
                break
            pages.append(page)
    return Dataset(schema=schema, pages=tuple(pages))


def write_dataset(dataset: Dataset) -> bytes:
    """Emit the canonical byte image of a Dataset."""
    schema = dataset.schema
    header = emit_header(schema)
    if schema.mode is Mode.ASCII:
        buf = io.StringIO()
        for page in dataset.pages:
            write_page_ascii(buf, schema, page)
        return header + buf.getvalue().encode("utf-8")
    buf = io.BytesIO()
    for page in dataset.pages:
        write_page_binary(buf, schema, page)
    return header + buf.getvalue()


def load(path: str) -> Dataset:
    with open(path, "rb") as fh:
        return read_dataset(fh.read())


def save(dataset: Dataset, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(write_dataset(dataset))
