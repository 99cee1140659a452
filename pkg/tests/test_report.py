import os

import numpy as np
import pytest

from sram_pad.report import csv_text, fmt, text_table, write_atomic


def test_fmt():
    assert fmt(1 / 3) == "0.333333"
    assert fmt(np.float64(123456789.0)) == "1.23457e+08"
    assert fmt(True) == "true" and fmt(7) == "7" and fmt("a") == "a"


def test_csv_quotes_and_newlines():
    text = csv_text(["a", "b"], [("(1H,2H,0)", 0.5)])
    assert text == 'a,b\n"(1H,2H,0)",0.5\n'


def test_write_atomic_replaces(tmp_path):
    p = tmp_path / "sub" / "out.csv"
    write_atomic(p, "one\n")
    write_atomic(p, "two\n")
    assert p.read_text() == "two\n"
    assert os.listdir(p.parent) == ["out.csv"]


def test_write_atomic_cleans_up_on_error(tmp_path):
    with pytest.raises(TypeError):
        write_atomic(tmp_path / "x.csv", None)
    assert os.listdir(tmp_path) == []


def test_text_table_alignment():
    out = text_table(["k", "value"], [("a", 1.0), ("bbb", 22.5)])
    lines = out.splitlines()
    assert lines[0].startswith("k  ") and lines[2].startswith("bbb")
