"""ASCII header parsing and canonical emission.

The header is what makes the files self-describing: a magic line
``SDDS1`` followed by namelist-style commands, ending with the ``&data``
command after which page data begins.

Grammar (normative for this implementation):

* magic: exactly ``SDDS1`` then a line feed (CRLF accepted on read).
* command: ``&kind key=value, key=value, ... &end`` with whitespace
  (space, tab, newline) free between tokens; commas between fields are
  accepted but not required.
* value: a bare token (no whitespace, ``,``, ``"`` or ``&``) or a
  double-quoted string with escapes ``\\"``, ``\\\\``, ``\\n``, ``\\t``.
* ``!`` at the start of a line between commands starts a comment.
* recognized commands/keys:
  ``description``: text, contents;
  ``parameter``/``column``: name, type, units, description;
  ``array``: those plus dimensions (default 1);
  ``data``: mode, endian.  Unknown kinds or keys are errors.
* ``&data`` is always the last command; at most one ``&description``.

Emission is canonical: a Schema maps to exactly one byte string, so
equal schemas produce byte-identical headers and re-emission after a
parse is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import HeaderError, ParseDiagnostic
from .model import (
    ArrayDef,
    DataType,
    Endian,
    FieldDef,
    MAX_ARRAY_DIMS,
    Mode,
    Schema,
    TYPE_TOKENS,
    validate_schema,
)

__all__ = ["Command", "parse_header", "emit_header", "parse_command",
           "MAGIC"]

MAGIC = b"SDDS1"

_COMMAND_KEYS = {
    "description": ("text", "contents"),
    "parameter": ("name", "type", "units", "description"),
    "column": ("name", "type", "units", "description"),
    "array": ("name", "type", "units", "description", "dimensions"),
    "data": ("mode", "endian"),
}

_BARE_FORBIDDEN = set(' \t\r\n,"&')
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


@dataclass(frozen=True)
class Command:
    """One parsed ``&kind ... &end`` header command."""

    kind: str
    fields: tuple[tuple[str, str], ...]
    line: int

    def get(self, key: str) -> str | None:
        for k, v in self.fields:
            if k == key:
                return v
        return None


class _Scanner:
    """Byte-level cursor over header text with line/column tracking."""

    def __init__(self, data: bytes, line: int = 1):
        self.data = data
        self.pos = 0
        self.start_line = line

    def location(self, pos: int | None = None) -> tuple[int, int]:
        p = self.pos if pos is None else pos
        line = self.start_line + self.data.count(b"\n", 0, p)
        last_nl = self.data.rfind(b"\n", 0, p)
        return line, p - last_nl

    def fail(self, message: str, pos: int | None = None) -> HeaderError:
        line, column = self.location(pos)
        return HeaderError(ParseDiagnostic(line, column, message))

    def eof(self) -> bool:
        return self.pos >= len(self.data)

    def peek(self) -> int:
        return self.data[self.pos]

    def _check_byte(self, b: int) -> None:
        if b > 0x7E or (b < 0x20 and b not in (0x09, 0x0A, 0x0D)):
            raise self.fail(f"byte 0x{b:02x} is not valid in a header")

    def skip_space(self) -> None:
        while not self.eof() and self.data[self.pos] in b" \t\r\n":
            self.pos += 1

    def at_line_start(self) -> bool:
        return self.pos == 0 or self.data[self.pos - 1 : self.pos] == b"\n"

    def skip_between_commands(self) -> None:
        """Skip whitespace and full-line ``!`` comments."""
        while not self.eof():
            if self.at_line_start() and self.peek() == ord("!"):
                nl = self.data.find(b"\n", self.pos)
                self.pos = len(self.data) if nl < 0 else nl + 1
                continue
            if self.peek() in b" \t\r\n":
                self.pos += 1
                continue
            self._check_byte(self.peek())
            return

    def take_word(self) -> str:
        start = self.pos
        while not self.eof():
            b = self.peek()
            if (0x41 <= b <= 0x5A) or (0x61 <= b <= 0x7A) or \
                    (0x30 <= b <= 0x39) or b == 0x5F:
                self.pos += 1
            else:
                break
        return self.data[start:self.pos].decode("ascii")

    def take_value(self) -> str:
        if self.peek() == ord('"'):
            return self._take_quoted()
        start = self.pos
        while not self.eof():
            b = self.peek()
            self._check_byte(b)
            if b in (0x20, 0x09, 0x0D, 0x0A, 0x2C, 0x22, 0x26):
                break
            self.pos += 1
        if self.pos == start:
            raise self.fail("expected a value")
        return self.data[start:self.pos].decode("ascii")

    def _take_quoted(self) -> str:
        open_pos = self.pos
        self.pos += 1
        out: list[str] = []
        while True:
            if self.eof():
                raise self.fail("unterminated quote", open_pos)
            b = self.peek()
            self._check_byte(b)
            self.pos += 1
            if b == 0x0D:  # CRLF inside a quoted value reads as LF
                continue
            if b == ord('"'):
                return "".join(out)
            if b == ord("\\"):
                if self.eof():
                    raise self.fail("unterminated quote", open_pos)
                esc = chr(self.peek())
                if esc not in _ESCAPES:
                    raise self.fail(f"bad escape '\\{esc}'", self.pos)
                out.append(_ESCAPES[esc])
                self.pos += 1
            else:
                out.append(chr(b))


def _scan_command(scanner: _Scanner) -> Command:
    """Parse one ``&kind ... &end`` command at the scanner position."""
    cmd_pos = scanner.pos
    cmd_line, _ = scanner.location()
    if scanner.eof() or scanner.peek() != ord("&"):
        raise scanner.fail("expected '&' to start a header command")
    scanner.pos += 1
    kind = scanner.take_word()
    if kind not in _COMMAND_KEYS:
        raise scanner.fail(f"unknown command kind '&{kind}'", cmd_pos)

    fields: list[tuple[str, str]] = []
    seen: set[str] = set()
    while True:
        scanner.skip_space()
        if scanner.eof():
            raise scanner.fail(f"missing &end for '&{kind}'", cmd_pos)
        if scanner.peek() == ord(","):
            scanner.pos += 1
            continue
        if scanner.peek() == ord("&"):
            end_pos = scanner.pos
            scanner.pos += 1
            word = scanner.take_word()
            if word != "end":
                raise scanner.fail("expected '&end'", end_pos)
            return Command(kind, tuple(fields), cmd_line)
        key_pos = scanner.pos
        key = scanner.take_word()
        if not key:
            scanner._check_byte(scanner.peek())
            raise scanner.fail("expected a field key or '&end'")
        scanner.skip_space()
        if scanner.eof() or scanner.peek() != ord("="):
            raise scanner.fail(f"expected '=' after key '{key}'")
        scanner.pos += 1
        scanner.skip_space()
        if scanner.eof():
            raise scanner.fail("expected a value")
        value = scanner.take_value()
        if key in seen:
            raise scanner.fail(f"duplicate key '{key}'", key_pos)
        if key not in _COMMAND_KEYS[kind]:
            raise scanner.fail(f"unknown field key '{key}' for '&{kind}'", key_pos)
        seen.add(key)
        fields.append((key, value))


def parse_command(text: str | bytes, line: int = 1) -> Command:
    """Parse a single header command; exposed for testing the grammar."""
    data = text.encode("utf-8") if isinstance(text, str) else text
    scanner = _Scanner(data, line=line)
    scanner.skip_between_commands()
    return _scan_command(scanner)


def _fail_at(cmd: Command, message: str) -> HeaderError:
    return HeaderError(ParseDiagnostic(cmd.line, 1, message))


def _field_from_command(cmd: Command) -> FieldDef:
    name = cmd.get("name")
    type_token = cmd.get("type")
    for required, value in (("name", name), ("type", type_token)):
        if value is None:
            raise _fail_at(cmd, f"missing required field '{required}'")
    if type_token not in TYPE_TOKENS:
        raise _fail_at(cmd, f"bad type token '{type_token}'")
    return FieldDef(name=name, type=TYPE_TOKENS[type_token],
                    units=cmd.get("units"), description=cmd.get("description"))


def parse_header(data: bytes) -> tuple[Schema, int]:
    """Parse the header of ``data``.

    Returns the schema and the byte offset where page data begins (the
    byte after the newline that terminates the ``&data`` line).  Raises
    :class:`HeaderError` with a located diagnostic on any malformation.
    """
    if data[:7] == MAGIC + b"\r\n":
        body_start = 7
    elif data[:6] == MAGIC + b"\n":
        body_start = 6
    elif data[:4] == b"SDDS":
        raise HeaderError(ParseDiagnostic(1, 1, "unsupported version magic"))
    else:
        raise HeaderError(ParseDiagnostic(1, 1, "missing SDDS1 magic"))

    scanner = _Scanner(data[body_start:], line=2)

    description_text: str | None = None
    description_contents: str | None = None
    have_description = False
    parameters: list[FieldDef] = []
    arrays: list[ArrayDef] = []
    columns: list[FieldDef] = []
    names = {"parameter": set(), "array": set(), "column": set()}

    while True:
        scanner.skip_between_commands()
        if scanner.eof():
            raise scanner.fail("missing &data command")
        cmd = _scan_command(scanner)

        if cmd.kind == "description":
            if have_description:
                raise _fail_at(cmd, "duplicate &description")
            have_description = True
            description_text = cmd.get("text")
            description_contents = cmd.get("contents")
            continue

        if cmd.kind in ("parameter", "column", "array"):
            fd = _field_from_command(cmd)
            category = cmd.kind
            if not fd.name or not _identifier_ok(fd.name):
                raise _fail_at(cmd,
                               f"name {fd.name!r} is not a valid identifier")
            if fd.name in names[category]:
                raise _fail_at(cmd,
                               f"duplicate {category} name '{fd.name}'")
            names[category].add(fd.name)
            if category == "parameter":
                parameters.append(fd)
            elif category == "column":
                columns.append(fd)
            else:
                dims_token = cmd.get("dimensions")
                dim_count = 1
                if dims_token is not None:
                    try:
                        dim_count = int(dims_token)
                    except ValueError:
                        raise _fail_at(cmd,
                                       f"bad dimensions value '{dims_token}'")
                    if not 1 <= dim_count <= MAX_ARRAY_DIMS:
                        raise _fail_at(cmd,
                                       f"dimensions {dim_count} out of range "
                                       f"1..{MAX_ARRAY_DIMS}")
                arrays.append(ArrayDef(base=fd, dim_count=dim_count))
            continue

        # &data: the final command.
        mode_token = cmd.get("mode")
        if mode_token is None:
            raise _fail_at(cmd, "missing required field 'mode'")
        if mode_token not in (Mode.ASCII.token, Mode.BINARY.token):
            raise _fail_at(cmd, f"bad mode token '{mode_token}'")
        endian_token = cmd.get("endian")
        endian = Endian.LITTLE
        if endian_token is not None:
            if endian_token not in (Endian.LITTLE.token, Endian.BIG.token):
                raise _fail_at(cmd, f"bad endian token '{endian_token}'")
            endian = Endian(endian_token)

        # Only trailing whitespace may follow on the &data line.
        while not scanner.eof() and scanner.peek() in b" \t\r":
            scanner.pos += 1
        if not scanner.eof():
            if scanner.peek() != ord("\n"):
                raise scanner.fail("unexpected content after the &data command")
            scanner.pos += 1
        data_start = body_start + scanner.pos

        schema = Schema(description_text=description_text,
                        description_contents=description_contents,
                        parameters=tuple(parameters),
                        arrays=tuple(arrays),
                        columns=tuple(columns),
                        mode=Mode(mode_token),
                        endian=endian)
        remaining = validate_schema(schema)
        if remaining:  # pragma: no cover - parse checks mirror validate_schema
            raise _fail_at(cmd, remaining[0])
        return schema, data_start


def _identifier_ok(name: str) -> bool:
    from .model import IDENTIFIER_RE

    return bool(IDENTIFIER_RE.match(name))


def _format_value(value: str) -> str:
    if value and not any(c in _BARE_FORBIDDEN or not (0x20 <= ord(c) <= 0x7E)
                         for c in value):
        return value
    out = ['"']
    for c in value:
        if c == '"':
            out.append('\\"')
        elif c == "\\":
            out.append("\\\\")
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        else:
            out.append(c)
    out.append('"')
    return "".join(out)


def _emit_command(kind: str, fields: list[tuple[str, str]]) -> str:
    parts = [f"&{kind}"]
    for key, value in fields:
        parts.append(f"{key}={_format_value(value)},")
    parts.append("&end")
    return " ".join(parts) + "\n"


def _field_pairs(fd: FieldDef) -> list[tuple[str, str]]:
    pairs = [("name", fd.name), ("type", fd.type.token)]
    if fd.units is not None:
        pairs.append(("units", fd.units))
    if fd.description is not None:
        pairs.append(("description", fd.description))
    return pairs


def emit_header(schema: Schema) -> bytes:
    """Emit the canonical header byte string for a valid schema."""
    diags = validate_schema(schema)
    if diags:
        raise ValueError(f"invalid schema: {diags[0]}")

    out = [MAGIC.decode() + "\n"]
    if schema.description_text is not None or schema.description_contents is not None:
        pairs = []
        if schema.description_text is not None:
            pairs.append(("text", schema.description_text))
        if schema.description_contents is not None:
            pairs.append(("contents", schema.description_contents))
        out.append(_emit_command("description", pairs))
    for fd in schema.parameters:
        out.append(_emit_command("parameter", _field_pairs(fd)))
    for ad in schema.arrays:
        pairs = _field_pairs(ad.base)
        pairs.append(("dimensions", str(ad.dim_count)))
        out.append(_emit_command("array", pairs))
    for fd in schema.columns:
        out.append(_emit_command("column", _field_pairs(fd)))
    data_pairs = [("mode", schema.mode.token)]
    if schema.mode is Mode.BINARY or schema.endian is not Endian.LITTLE:
        data_pairs.append(("endian", schema.endian.token))
    out.append(_emit_command("data", data_pairs))
    return "".join(out).encode("ascii")
