"""ASCII page codec: human-readable pages with lossless numeric round
trips.

Page layout, in order:

* one line per parameter value
* per array: a line with the dimension sizes, then exactly
  ``prod(dims)`` whitespace-separated elements (these may wrap lines)
* a line with the row count
* one line per row, one value per column

Blank lines and ``!`` comment lines between items are skipped; a ``!``
at a token-start position ends the line's data.  Row lines must be
single physical lines so line-oriented tools can process them.

Numbers are emitted as the shortest decimal string that parses back to
the identical bits, so ASCII is a lossless normal form for everything
except NaN payloads (all NaNs print as ``nan``).  Floats always carry a
decimal point or exponent; ``1.0`` never prints as ``1``.
"""

from __future__ import annotations

import math
import re
import struct

from .errors import DataError
from .model import (
    ArrayInstance,
    DataType,
    INT32_MAX,
    INT_RANGES,
    Page,
    Schema,
    Value,
    validate_page,
)

__all__ = ["TokenStream", "format_value", "parse_value",
           "read_page_ascii", "write_page_ascii"]

_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
_FLOAT_RE = re.compile(
    r"[+-]?(?:(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?"
    r"|inf(?:inity)?|nan)\Z",
    re.IGNORECASE,
)
class TokenStream:
    """Tokenizer over the data region of an ASCII-mode file.

    Tracks absolute line numbers for diagnostics.  Tokens keep their
    raw spelling (quotes and escapes intact); :func:`parse_value`
    decodes them.
    """

    def __init__(self, lines: list[str], first_line: int = 1):
        self._lines = lines
        self._first_line = first_line
        self._index = 0
        # leftover tokens from a line partially consumed by an array read
        self._carry: tuple[int, list[str]] | None = None

    @property
    def line(self) -> int:
        return self._first_line + self._index

    def _tokenize(self, text: str, line_no: int) -> list[str]:
        tokens: list[str] = []
        i, n = 0, len(text)
        while i < n:
            c = text[i]
            if c in " \t\r":
                i += 1
                continue
            if c == "!":
                break
            if c == '"':
                j = i + 1
                while j < n:
                    if text[j] == "\\":
                        j += 2
                        continue
                    if text[j] == '"':
                        break
                    j += 1
                if j >= n:
                    raise DataError("unterminated quote", line=line_no)
                tokens.append(text[i:j + 1])
                i = j + 1
            else:
                j = i
                while j < n and text[j] not in " \t\r":
                    j += 1
                tokens.append(text[i:j])
                i = j
        return tokens

    def _advance(self) -> tuple[int, list[str]] | None:
        """Next non-empty data line as (line_no, tokens), or None at EOF."""
        while self._index < len(self._lines):
            line_no = self.line
            tokens = self._tokenize(self._lines[self._index], line_no)
            self._index += 1
            if tokens:
                return line_no, tokens
        return None

    def has_data(self) -> bool:
        if self._carry is not None:
            return True
        save = self._index
        found = self._advance() is not None
        self._index = save
        return found

    def next_line_tokens(self, what: str) -> tuple[int, list[str]]:
        """One full data line; the unit for parameters, counts and rows."""
        if self._carry is not None:
            raise DataError(f"unexpected extra tokens before {what}",
                            line=self._carry[0])
        got = self._advance()
        if got is None:
            raise DataError(f"end of file while reading {what}",
                            line=self.line)
        return got

    def next_tokens(self, count: int, what: str) -> list[str]:
        """``count`` tokens, pulled across as many lines as needed."""
        out: list[str] = []
        while len(out) < count:
            if self._carry is not None:
                line_no, tokens = self._carry
                take = min(count - len(out), len(tokens))
                out.extend(tokens[:take])
                rest = tokens[take:]
                self._carry = (line_no, rest) if rest else None
                continue
            got = self._advance()
            if got is None:
                raise DataError(f"end of file while reading {what}",
                                line=self.line)
            self._carry = got
        return out


def _unquote(token: str, line: int | None = None) -> str:
    if len(token) >= 2 and token[0] == '"' and token[-1] == '"':
        body = token[1:-1]
        out: list[str] = []
        i = 0
        while i < len(body):
            c = body[i]
            if c != "\\":
                out.append(c)
                i += 1
                continue
            if i + 1 >= len(body):
                raise DataError("dangling escape in string", line=line)
            e = body[i + 1]
            if e == "n":
                out.append("\n")
            elif e == "t":
                out.append("\t")
            elif e in ('"', "\\"):
                out.append(e)
            elif e == "x":
                if i + 3 >= len(body):
                    raise DataError("bad \\x escape", line=line)
                try:
                    out.append(chr(int(body[i + 2:i + 4], 16)))
                except ValueError:
                    raise DataError("bad \\x escape", line=line) from None
                i += 4
                continue
            else:
                raise DataError(f"bad escape '\\{e}'", line=line)
            i += 2
        return "".join(out)
    return token


def parse_value(token: str, dtype: DataType, line: int | None = None) -> Value:
    """Decode one token; permissive about non-canonical spellings."""
    text = _unquote(token, line)
    if dtype.is_integer:
        if not _INT_RE.match(text):
            raise DataError(f"malformed {dtype.token} '{token}'", line=line)
        n = int(text)
        lo, hi = INT_RANGES[dtype]
        if not lo <= n <= hi:
            raise DataError(f"{dtype.token} overflow: '{token}'", line=line)
        return Value(dtype, n)
    if dtype.is_float:
        if not _FLOAT_RE.match(text):
            raise DataError(f"malformed {dtype.token} '{token}'", line=line)
        return Value(dtype, float(text))
    if dtype is DataType.STRING:
        return Value(DataType.STRING, text)
    # character
    if len(text) != 1 or ord(text) > 255:
        raise DataError(f"character token {token!r} does not decode "
                        f"to one byte", line=line)
    return Value(DataType.CHARACTER, ord(text))


def _shortest_float32(x: float) -> str:
    bits = struct.pack("<f", x)
    for precision in range(1, 10):
        s = f"{x:.{precision}g}"
        if struct.pack("<f", float(s)) == bits:
            return s
    return f"{x:.9g}"  # pragma: no cover - 9 digits always round-trip


def _with_float_marker(s: str) -> str:
    return s if any(c in s for c in ".eE") else s + ".0"


_STRING_FORCE_QUOTE = set(' \t\n\r"\\!')


def format_value(value: Value) -> str:
    """Canonical token for a value."""
    t = value.type
    if t.is_integer:
        return str(value.data)
    if t.is_float:
        x = value.data
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if t is DataType.FLOAT:
            return _with_float_marker(_shortest_float32(x))
        return _with_float_marker(repr(x))
    if t is DataType.STRING:
        s = value.data
        if s and not any(c in _STRING_FORCE_QUOTE or ord(c) < 0x20
                         or ord(c) == 0x7F for c in s):
            return s
        return _quote(s)
    return _quote_char(value.data)


def _quote(s: str) -> str:
    out = ['"']
    for c in s:
        if c == '"':
            out.append('\\"')
        elif c == "\\":
            out.append("\\\\")
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif ord(c) < 0x20 or ord(c) == 0x7F:
            out.append(f"\\x{ord(c):02x}")
        else:
            out.append(c)
    out.append('"')
    return "".join(out)


def _quote_char(byte: int) -> str:
    if byte == 0x22:
        return '"\\""'
    if byte == 0x5C:
        return '"\\\\"'
    if 0x20 <= byte <= 0x7E:
        return f'"{chr(byte)}"'
    return f'"\\x{byte:02x}"'


def read_page_ascii(stream: TokenStream, schema: Schema) -> Page | None:
    """Read one page, or return None on a clean end of data."""
    if not stream.has_data():
        return None

    parameter_values = []
    for fd in schema.parameters:
        line_no, tokens = stream.next_line_tokens(f"parameter '{fd.name}'")
        if len(tokens) != 1:
            raise DataError(f"parameter '{fd.name}': expected 1 value, "
                            f"got {len(tokens)}", line=line_no)
        parameter_values.append(parse_value(tokens[0], fd.type, line_no))

    array_values = []
    for ad in schema.arrays:
        line_no, tokens = stream.next_line_tokens(
            f"dimensions of array '{ad.name}'")
        if len(tokens) != ad.dim_count:
            raise DataError(f"array '{ad.name}': expected {ad.dim_count} "
                            f"dimension(s), got {len(tokens)}", line=line_no)
        dims = []
        for token in tokens:
            size = parse_value(token, DataType.LONG, line_no).data
            if size < 0:
                raise DataError(f"array '{ad.name}': negative dimension "
                                f"{size}", line=line_no)
            dims.append(size)
        count = math.prod(dims)
        raw = stream.next_tokens(count, f"elements of array '{ad.name}'")
        elements = tuple(parse_value(tok, ad.type, stream.line)
                         for tok in raw)
        array_values.append(ArrayInstance(dims=tuple(dims), elements=elements))

    line_no, tokens = stream.next_line_tokens("row count")
    if len(tokens) != 1:
        raise DataError(f"row count line: expected 1 value, got {len(tokens)}",
                        line=line_no)
    row_count = parse_value(tokens[0], DataType.LONG, line_no).data
    if row_count < 0:
        raise DataError(f"negative row count {row_count}", line=line_no)

    columns: list[list[Value]] = [[] for _ in schema.columns]
    if schema.columns:
        for r in range(row_count):
            line_no, tokens = stream.next_line_tokens(f"row {r + 1}")
            if len(tokens) != len(schema.columns):
                raise DataError(f"row {r + 1}: expected {len(schema.columns)} "
                                f"value(s), got {len(tokens)}", line=line_no)
            for col, fd, token in zip(columns, schema.columns, tokens):
                col.append(parse_value(token, fd.type, line_no))

    return Page(parameter_values=tuple(parameter_values),
                array_values=tuple(array_values),
                column_data=tuple(tuple(c) for c in columns),
                row_count=row_count)


def write_page_ascii(out, schema: Schema, page: Page) -> int:
    """Append one page in canonical form to a text stream.

    Returns the number of bytes written (LF line endings).
    """
    diags = validate_page(schema, page)
    if diags:
        raise DataError(f"page does not match schema: {diags[0]}")

    lines: list[str] = []
    for value in page.parameter_values:
        lines.append(format_value(value))
    for inst in page.array_values:
        lines.append(" ".join(str(d) for d in inst.dims))
        if inst.elements:
            lines.append(" ".join(format_value(v) for v in inst.elements))
    lines.append(str(page.row_count))
    if schema.columns:
        for r in range(page.row_count):
            lines.append(" ".join(format_value(vector[r])
                                  for vector in page.column_data))
    text = "".join(line + "\n" for line in lines)
    out.write(text)
    return len(text.encode("utf-8"))
