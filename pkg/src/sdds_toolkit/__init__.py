"""Self-describing dataset files: model, codecs and postprocessing.

The public surface re-exported here covers the common path: build or
load a :class:`Dataset`, inspect it through its :class:`Schema`, and
write it back in either encoding.
"""

from .errors import (
    DataError,
    ExprError,
    HeaderError,
    ParseDiagnostic,
    SddsError,
)
from .files import load, read_dataset, save, write_dataset
from .header import emit_header, parse_header
from .model import (
    ArrayDef,
    ArrayInstance,
    DataType,
    Dataset,
    Endian,
    FieldDef,
    Mode,
    Page,
    Schema,
    Value,
    datasets_match,
    find_field,
    pages_match,
    validate_page,
    validate_schema,
    values_match,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayDef",
    "ArrayInstance",
    "DataError",
    "DataType",
    "Dataset",
    "Endian",
    "ExprError",
    "FieldDef",
    "HeaderError",
    "Mode",
    "Page",
    "ParseDiagnostic",
    "SddsError",
    "Schema",
    "Value",
    "datasets_match",
    "emit_header",
    "find_field",
    "load",
    "pages_match",
    "parse_header",
    "read_dataset",
    "save",
    "validate_page",
    "validate_schema",
    "values_match",
    "write_dataset",
    "__version__",
]
