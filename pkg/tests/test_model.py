import math

import pytest

from sdds_toolkit.model import (
    ArrayDef,
    ArrayInstance,
    DataType,
    FieldDef,
    Page,
    Schema,
    Value,
    find_field,
    validate_page,
    validate_schema,
    values_match,
)


def _schema(**kw):
    return Schema(**kw)


class TestValue:
    def test_integer_ranges(self):
        assert Value(DataType.SHORT, 32767).data == 32767
        with pytest.raises(ValueError):
            Value(DataType.SHORT, 32768)
        with pytest.raises(ValueError):
            Value(DataType.LONG, 2**31)
        assert Value(DataType.LONG64, -(2**63)).data == -(2**63)

    def test_character_range(self):
        assert Value(DataType.CHARACTER, 255).data == 255
        with pytest.raises(ValueError):
            Value(DataType.CHARACTER, 256)
        with pytest.raises(ValueError):
            Value(DataType.CHARACTER, -1)

    def test_bool_rejected(self):
        with pytest.raises(ValueError):
            Value(DataType.LONG, True)

    def test_float32_snaps_to_binary32(self):
        v = Value(DataType.FLOAT, 0.1)
        assert v.data != 0.1  # 0.1 is not representable in binary32
        assert v == Value(DataType.FLOAT, v.data)

    def test_float_equality_is_bitwise(self):
        assert Value(DataType.DOUBLE, 0.0) != Value(DataType.DOUBLE, -0.0)
        nan_a = Value(DataType.DOUBLE, math.nan)
        nan_b = Value(DataType.DOUBLE, math.nan)
        assert nan_a == nan_b  # same canonical bit pattern
        payload = Value(DataType.DOUBLE, math.nan, nan_bits=0x7FF8000000000001)
        assert payload != nan_a
        assert values_match(payload, nan_a, nan_payload_sensitive=False)

    def test_tag_mismatch_types(self):
        with pytest.raises(ValueError):
            Value(DataType.STRING, 4)
        with pytest.raises(ValueError):
            Value(DataType.LONG, "4")


class TestValidateSchema:
    def test_well_formed(self):
        schema = _schema(columns=(FieldDef("x", DataType.DOUBLE),
                                  FieldDef("y", DataType.DOUBLE)))
        assert validate_schema(schema) == []

    def test_duplicate_parameter_name(self):
        schema = _schema(parameters=(FieldDef("t", DataType.DOUBLE),
                                     FieldDef("t", DataType.LONG)))
        diags = validate_schema(schema)
        assert len(diags) == 1
        assert "duplicate parameter name 't'" in diags[0]

    def test_dim_count_out_of_range(self):
        for bad in (0, 9):
            schema = _schema(arrays=(ArrayDef(FieldDef("a", DataType.LONG),
                                              dim_count=bad),))
            diags = validate_schema(schema)
            assert len(diags) == 1
            assert "out of range" in diags[0]

    def test_bad_identifier(self):
        for name in ("", "9x", "a b", "x-"):
            schema = _schema(columns=(FieldDef(name, DataType.LONG),))
            assert any("identifier" in d for d in validate_schema(schema))

    def test_pv_style_names_accepted(self):
        schema = _schema(columns=(FieldDef("S1:BPM.X", DataType.DOUBLE),))
        assert validate_schema(schema) == []

    def test_cross_category_duplicates_allowed(self):
        schema = _schema(parameters=(FieldDef("x", DataType.LONG),),
                         columns=(FieldDef("x", DataType.DOUBLE),))
        assert validate_schema(schema) == []

    def test_unrepresentable_header_text(self):
        schema = _schema(columns=(FieldDef("x", DataType.LONG, units="\x01"),))
        assert any("cannot represent" in d for d in validate_schema(schema))


class TestValidatePage:
    def test_empty_conforming_page(self):
        assert validate_page(_schema(), Page()) == []

    def test_column_length_mismatch(self):
        schema = _schema(columns=(FieldDef("x", DataType.LONG),))
        page = Page(column_data=((Value(DataType.LONG, 1),
                                  Value(DataType.LONG, 2),
                                  Value(DataType.LONG, 3)),),
                    row_count=4)
        diags = validate_page(schema, page)
        assert any("column 'x' length 3 != row_count 4" in d for d in diags)

    def test_array_element_count(self):
        schema = _schema(arrays=(ArrayDef(FieldDef("a", DataType.LONG),
                                          dim_count=2),))
        inst = ArrayInstance((2, 3), tuple(Value(DataType.LONG, i)
                                           for i in range(5)))
        diags = validate_page(schema, Page(array_values=(inst,)))
        assert any("array 'a' has 5 elements, expected 6" in d for d in diags)

    def test_tag_slot_mismatch(self):
        schema = _schema(parameters=(FieldDef("t", DataType.DOUBLE),))
        page = Page(parameter_values=(Value(DataType.LONG, 3),))
        diags = validate_page(schema, page)
        assert any("parameter 't'" in d for d in diags)

    def test_total_on_malformed(self):
        schema = _schema(parameters=(FieldDef("t", DataType.DOUBLE),),
                         columns=(FieldDef("x", DataType.LONG),))
        page = Page()  # everything missing
        diags = validate_page(schema, page)
        assert diags  # reported, not raised


class TestFindField:
    def test_basics(self):
        schema = _schema(columns=(FieldDef("x", DataType.LONG),
                                  FieldDef("y", DataType.LONG)))
        assert find_field(schema, "column", "y") == 1
        assert find_field(schema, "column", "z") is None

    def test_case_sensitive(self):
        schema = _schema(parameters=(FieldDef("x", DataType.LONG),))
        assert find_field(schema, "parameter", "X") is None

    def test_result_names_match(self):
        schema = _schema(parameters=(FieldDef("a", DataType.LONG),
                                     FieldDef("b", DataType.LONG)))
        for name in ("a", "b"):
            idx = find_field(schema, "parameter", name)
            assert schema.parameters[idx].name == name
