from __future__ import annotations

import pytest

from nonloc import jsonio
from nonloc.errors import StructuralError


def test_locate_records_value_offsets():
    text = '{"a": {}, "b": [], "c": [1, {"d": null}]}'
    spots = jsonio.locate(text)
    assert text[spots[("c", 1, "d")]:].startswith("null")
    assert text[spots[("c", 0)]] == "1"


def test_schema_error_points_at_offending_line():
    text = '{\n  "scenario": {"settings": [2], "outcomes": [2]},\n  "table": [\n    {"x": [0], "a": [0], "p": true}\n  ]\n}'
    with pytest.raises(StructuralError, match=r"^in\.json:4:\d+: at table/0/p"):
        jsonio.parse(text, jsonio.BEHAVIOR_SCHEMA, "in.json")


def test_syntax_error_reports_line_and_column():
    with pytest.raises(StructuralError, match=r"^g\.json:2:4: invalid JSON"):
        jsonio.parse('{"a": [1,\n 2,, 3]}', None, "g.json")


def test_missing_file_is_a_structural_error(tmp_path):
    with pytest.raises(StructuralError, match="cannot read"):
        jsonio.load(tmp_path / "absent.json")


def test_dumps_is_sorted_and_newline_terminated():
    assert jsonio.dumps({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'
