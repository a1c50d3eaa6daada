import dataclasses
import math
import random
import subprocess
import sys

import pytest

from generators import rand_dataset
from sdds_toolkit.cli import main
from sdds_toolkit.expr import eval_expr, parse_expr, type_check
from sdds_toolkit.files import load, read_dataset, save, write_dataset
from sdds_toolkit.model import (
    DataType,
    Dataset,
    Endian,
    FieldDef,
    Mode,
    Page,
    Schema,
    Value,
    datasets_match,
)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def table(tmp_path, name="t.sdds", xs=(1, 2, 3, 4), mode=Mode.ASCII):
    schema = Schema(columns=(FieldDef("x", DataType.LONG, units="m"),
                             FieldDef("y", DataType.DOUBLE)),
                    mode=mode)
    page = Page(column_data=(tuple(Value(DataType.LONG, x) for x in xs),
                             tuple(Value(DataType.DOUBLE, float(x * x))
                                   for x in xs)),
                row_count=len(xs))
    path = tmp_path / name
    save(Dataset(schema, (page,)), str(path))
    return str(path)


class TestQuery:
    def test_structure_listing(self, capsys, tmp_path):
        path = table(tmp_path)
        code, out, err = run(capsys, "query", path)
        assert code == 0 and err == ""
        assert "column x long m" in out
        assert "column y double" in out
        assert "pages: 1" in out
        assert "page 1: 4 rows" in out

    def test_zero_pages(self, capsys, tmp_path):
        path = tmp_path / "empty.sdds"
        save(Dataset(Schema(columns=(FieldDef("x", DataType.DOUBLE),))),
             str(path))
        code, out, _ = run(capsys, "query", str(path))
        assert code == 0
        assert "pages: 0" in out

    def test_corrupt_header(self, capsys, tmp_path):
        path = tmp_path / "bad.sdds"
        path.write_bytes(b"SDDS1\n&column name=x type=wat &end\n"
                         b"&data mode=ascii, &end\n")
        code, out, err = run(capsys, "query", str(path))
        assert code == 1
        assert "line 2" in err


class TestPrint:
    def test_header_and_rows(self, capsys, tmp_path):
        path = table(tmp_path, xs=(1, 2))
        code, out, _ = run(capsys, "print", path)
        assert code == 0
        lines = out.splitlines()
        assert lines[0].split() == ["x", "y"]
        assert lines[1].split() == ["m"]  # units row
        assert lines[2].split() == ["1", "1.0"]

    def test_column_subset_reorder(self, capsys, tmp_path):
        path = table(tmp_path)
        code, out, _ = run(capsys, "print", path, "--columns", "y,x")
        assert code == 0
        assert out.splitlines()[0].split() == ["y", "x"]

    def test_unknown_column(self, capsys, tmp_path):
        path = table(tmp_path)
        code, _, err = run(capsys, "print", path, "--columns", "zz")
        assert code == 1
        assert "unknown column 'zz'" in err

    def test_page_out_of_range(self, capsys, tmp_path):
        path = table(tmp_path)
        code, _, err = run(capsys, "print", path, "--page", "2")
        assert code == 1
        assert "page 2 of 1" in err

    def test_multi_page_labels(self, capsys, tmp_path):
        ds = load(table(tmp_path))
        ds = Dataset(ds.schema, ds.pages * 2)
        path = tmp_path / "two.sdds"
        save(ds, str(path))
        code, out, _ = run(capsys, "print", str(path))
        assert code == 0
        assert "*** page 1" in out and "*** page 2" in out


class TestConvert:
    def test_three_step_round_trip(self, capsys, tmp_path):
        # binary little -> ascii -> binary big keeps every value
        rng = random.Random(123)
        src = tmp_path / "src.sdds"
        save(rand_dataset(rng, mode=Mode.BINARY, endian=Endian.LITTLE,
                          max_rows=30), str(src))
        a, b, c = (str(tmp_path / n) for n in ("a.sdds", "b.sdds", "c.sdds"))
        assert main(["convert", str(src), a, "--mode", "ascii"]) == 0
        assert main(["convert", a, b, "--mode", "binary", "--endian", "big"]) == 0
        assert main(["convert", b, c, "--mode", "binary", "--endian", "little"]) == 0
        assert datasets_match(load(str(src)), load(c),
                              nan_payload_sensitive=False)

    def test_same_mode_idempotent(self, capsys, tmp_path):
        path = table(tmp_path)
        out1 = str(tmp_path / "c1.sdds")
        out2 = str(tmp_path / "c2.sdds")
        assert main(["convert", path, out1]) == 0
        assert main(["convert", out1, out2]) == 0
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_endian_with_ascii_inert_but_recorded(self, capsys, tmp_path):
        path = table(tmp_path)
        out = str(tmp_path / "c.sdds")
        assert main(["convert", path, out, "--endian", "big"]) == 0
        ds = load(out)
        assert ds.schema.mode is Mode.ASCII
        assert ds.schema.endian is Endian.BIG

    def test_stdout_dash(self, capsys, tmp_path):
        path = table(tmp_path, xs=(7,))
        code, out, _ = run(capsys, "convert", path, "-")
        assert code == 0
        assert out.startswith("SDDS1\n")

    def test_binary_to_stdout_rejected(self, capsys, tmp_path):
        path = table(tmp_path)
        code, _, err = run(capsys, "convert", path, "-", "--mode", "binary")
        assert code == 1
        assert "binary" in err


class TestCheck:
    def test_clean(self, capsys, tmp_path):
        code, out, err = run(capsys, "check", table(tmp_path))
        assert (code, out, err) == (0, "", "")

    def test_truncated_binary(self, capsys, tmp_path):
        path = table(tmp_path, mode=Mode.BINARY)
        data = open(path, "rb").read()
        open(path, "wb").write(data[:-3])
        code, _, err = run(capsys, "check", path)
        assert code == 1
        assert "truncated page at offset" in err

    def test_duplicate_column_names(self, capsys, tmp_path):
        path = tmp_path / "dup.sdds"
        path.write_bytes(b"SDDS1\n&column name=x, type=long, &end\n"
                         b"&column name=x, type=long, &end\n"
                         b"&data mode=ascii, &end\n0\n")
        code, _, err = run(capsys, "check", str(path))
        assert code == 1
        assert "duplicate column name 'x'" in err


class TestFilter:
    def test_brute_force_oracle(self, capsys, tmp_path):
        path = table(tmp_path, xs=(1, 2, 3, 4))
        out = str(tmp_path / "f.sdds")
        assert main(["filter", path, out, "--where", "x>2"]) == 0
        ds = load(out)
        assert [v.data for v in ds.pages[0].column_data[0]] == [3, 4]

    def test_identity_filter_is_canonicalization(self, capsys, tmp_path):
        path = table(tmp_path)
        out = str(tmp_path / "f.sdds")
        assert main(["filter", path, out, "--where", "1==1"]) == 0
        assert open(out, "rb").read() == open(path, "rb").read()

    def test_pages_kept_when_empty(self, capsys, tmp_path):
        ds = load(table(tmp_path))
        ds = Dataset(ds.schema, ds.pages * 3)
        path = str(tmp_path / "three.sdds")
        save(ds, path)
        out = str(tmp_path / "f.sdds")
        assert main(["filter", path, out, "--where", "x>100"]) == 0
        filtered = load(out)
        assert len(filtered.pages) == 3
        assert all(p.row_count == 0 for p in filtered.pages)

    def test_syntax_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "filter", table(tmp_path),
                           str(tmp_path / "o.sdds"), "--where", "x+")
        assert code == 1
        assert "--where" in err

    def test_non_logical_rejected(self, capsys, tmp_path):
        code, _, err = run(capsys, "filter", table(tmp_path),
                           str(tmp_path / "o.sdds"), "--where", "x+1")
        assert code == 1
        assert "logical" in err


class TestDerive:
    def test_double_column(self, capsys, tmp_path):
        path = table(tmp_path, xs=(1, 2))
        out = str(tmp_path / "d.sdds")
        assert main(["derive", path, out, "--column", "z=x*2:double"]) == 0
        ds = load(out)
        assert ds.schema.columns[-1] == FieldDef("z", DataType.DOUBLE)
        assert [v.data for v in ds.pages[0].column_data[-1]] == [2.0, 4.0]

    def test_round_half_even(self, capsys, tmp_path):
        path = tmp_path / "r.sdds"
        schema = Schema(columns=(FieldDef("x", DataType.DOUBLE),))
        xs = (2.5, 3.5, -2.5, 0.5)
        save(Dataset(schema, (Page(column_data=(tuple(Value(DataType.DOUBLE, x)
                                                      for x in xs),),
                                   row_count=4),)), str(path))
        out = str(tmp_path / "d.sdds")
        assert main(["derive", str(path), out, "--column", "i=x:long"]) == 0
        assert [v.data for v in load(out).pages[0].column_data[-1]] == \
            [2, 4, -2, 0]

    def test_name_clash(self, capsys, tmp_path):
        code, _, err = run(capsys, "derive", table(tmp_path),
                           str(tmp_path / "d.sdds"), "--column", "x=1:long")
        assert code == 1
        assert "already exists" in err

    def test_overflow_reports_page_and_row(self, capsys, tmp_path):
        path = table(tmp_path, xs=(1, 300))
        code, _, err = run(capsys, "derive", path, str(tmp_path / "d.sdds"),
                           "--column", "c=x*1000:short")
        assert code == 1
        assert "page 1, row 2" in err

    def test_string_target_needs_text(self, capsys, tmp_path):
        code, _, err = run(capsys, "derive", table(tmp_path),
                           str(tmp_path / "d.sdds"), "--column", "s=x:string")
        assert code == 1
        assert "text expression" in err

    def test_malformed_spec_is_usage_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "derive", table(tmp_path),
                           str(tmp_path / "d.sdds"), "--column", "zx*2")
        assert code == 2


class TestCombine:
    def test_concatenates_pages(self, capsys, tmp_path):
        ds = load(table(tmp_path))
        two = Dataset(ds.schema, ds.pages * 2)
        p2 = str(tmp_path / "two.sdds")
        save(two, p2)
        out = str(tmp_path / "all.sdds")
        assert main(["combine", out, p2, table(tmp_path, "one.sdds")]) == 0
        assert len(load(out).pages) == 3

    def test_single_input_canonicalizes(self, capsys, tmp_path):
        path = table(tmp_path)
        out = str(tmp_path / "c.sdds")
        assert main(["combine", out, path]) == 0
        assert open(out, "rb").read() == open(path, "rb").read()

    def test_units_mismatch_named(self, capsys, tmp_path):
        a = table(tmp_path, "a.sdds")
        ds = load(a)
        schema = dataclasses.replace(
            ds.schema,
            columns=(dataclasses.replace(ds.schema.columns[0], units="km"),)
            + ds.schema.columns[1:])
        b = str(tmp_path / "b.sdds")
        save(Dataset(schema, ds.pages), b)
        code, _, err = run(capsys, "combine", str(tmp_path / "o.sdds"), a, b)
        assert code == 1
        assert "column 'x' differs" in err

    def test_mode_endian_from_first_unless_flagged(self, capsys, tmp_path):
        a = table(tmp_path, "a.sdds", mode=Mode.BINARY)
        b = table(tmp_path, "b.sdds", mode=Mode.ASCII)
        out = str(tmp_path / "o.sdds")
        assert main(["combine", out, a, b]) == 0
        assert load(out).schema.mode is Mode.BINARY
        assert main(["combine", out, a, b, "--mode", "ascii"]) == 0
        assert load(out).schema.mode is Mode.ASCII

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "combine", str(tmp_path / "o.sdds"),
                           str(tmp_path / "nope.sdds"))
        assert code == 1


class TestPlot:
    def test_scatter_glyphs(self, capsys, tmp_path):
        path = table(tmp_path, xs=(1, 2, 3))
        out = tmp_path / "p.svg"
        assert main(["plot", path, "--x", "x", "--y", "y",
                     "-o", str(out)]) == 0
        assert out.read_bytes().count(b"<circle") == 3

    def test_lines(self, capsys, tmp_path):
        path = table(tmp_path)
        out = tmp_path / "p.svg"
        assert main(["plot", path, "--x", "x", "--y", "y", "--lines",
                     "-o", str(out)]) == 0
        assert out.read_bytes().count(b"<polyline") == 1

    def test_three_d(self, capsys, tmp_path):
        path = table(tmp_path, xs=(1, 2, 3))
        out = tmp_path / "p.svg"
        assert main(["plot", path, "--x", "x", "--y", "y", "--z", "x",
                     "-o", str(out)]) == 0
        assert out.read_bytes().count(b"<circle") == 3

    def test_missing_x_is_usage_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "plot", table(tmp_path), "--y", "y",
                           "-o", str(tmp_path / "p.svg"))
        assert code == 2

    def test_non_numeric_column(self, capsys, tmp_path):
        schema = Schema(columns=(FieldDef("s", DataType.STRING),
                                 FieldDef("x", DataType.LONG)))
        page = Page(column_data=((Value(DataType.STRING, "a"),),
                                 (Value(DataType.LONG, 1),)), row_count=1)
        path = str(tmp_path / "s.sdds")
        save(Dataset(schema, (page,)), path)
        code, _, err = run(capsys, "plot", path, "--x", "s", "--y", "x",
                           "-o", str(tmp_path / "p.svg"))
        assert code == 1
        assert "not numeric" in err


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_unknown_option(self, capsys, tmp_path):
        assert main(["query", table(tmp_path), "--wat"]) == 2

    def test_missing_file_is_data_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "query", str(tmp_path / "nope.sdds"))
        assert code == 1

    def test_console_script_subprocess(self, tmp_path):
        path = table(tmp_path)
        proc = subprocess.run([sys.executable, "-m", "sdds_toolkit",
                               "query", path],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "pages: 1" in proc.stdout

    def test_stdin_dash(self, tmp_path):
        data = open(table(tmp_path), "rb").read()
        proc = subprocess.run([sys.executable, "-m", "sdds_toolkit",
                               "query", "-"],
                              input=data, capture_output=True)
        assert proc.returncode == 0
        assert b"pages: 1" in proc.stdout


class TestPipelineComposition:
    def test_cli_pipeline_equals_in_memory(self, tmp_path, capsys):
        rng = random.Random(321)
        schema = Schema(columns=(FieldDef("x", DataType.LONG),
                                 FieldDef("y", DataType.DOUBLE)),
                        mode=Mode.ASCII)
        pages = []
        for _ in range(3):
            rows = rng.randint(0, 40)
            pages.append(Page(
                column_data=(tuple(Value(DataType.LONG, rng.randint(-50, 50))
                                   for _ in range(rows)),
                             tuple(Value(DataType.DOUBLE, rng.uniform(-5, 5))
                                   for _ in range(rows))),
                row_count=rows))
        ds = Dataset(schema, tuple(pages))
        src = str(tmp_path / "src.sdds")
        save(ds, src)

        # CLI route: convert -> derive -> filter
        a, b, c = (str(tmp_path / n) for n in ("a.sdds", "b.sdds", "c.sdds"))
        assert main(["convert", src, a, "--mode", "binary",
                     "--endian", "big"]) == 0
        assert main(["derive", a, b, "--column", "z=x*2+y:double"]) == 0
        assert main(["filter", b, c, "--where", "z > 0"]) == 0
        via_cli = load(c)

        # in-memory route
        ast = parse_expr("x*2+y")
        derived_schema = dataclasses.replace(
            schema, mode=Mode.BINARY, endian=Endian.BIG,
            columns=schema.columns + (FieldDef("z", DataType.DOUBLE),))
        out_pages = []
        for page in ds.pages:
            zs = tuple(Value(DataType.DOUBLE,
                             eval_expr(ast, schema, page, r))
                       for r in range(page.row_count))
            keep = [r for r in range(page.row_count) if zs[r].data > 0]
            out_pages.append(Page(
                column_data=tuple(tuple(col[r] for r in keep)
                                  for col in page.column_data + (zs,)),
                row_count=len(keep)))
        in_memory = Dataset(derived_schema, tuple(out_pages))

        assert datasets_match(via_cli, in_memory, compare_encoding=True)
