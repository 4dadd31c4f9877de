"""
test_io
"""

import math
from pathlib import Path
from typing import Any

import msgpack  # type: ignore[import]
import numpy as np
import pytest
from _pytest.capture import CaptureFixture

from lgtcli.config import config
from lgtcli.io import (
	Attribute,
	Metadata,
	RecordWriter,
	dump_json,
	list_attributes,
	read_json_file,
	read_records,
	write_columns,
	write_json_file,
	write_output,
)
from lgtcli.types import UsageError

ROWS = [
	{"observable": "plaquette", "mean": 0.5, "error": 0.01},
	{"observable": "wilson_loop[R=1,T=2]", "mean": 0.25, "error": None},
]

output_testdata = (
	(
		"json",
		ROWS,
		'[{"observable":"plaquette","mean":0.5,"error":0.01},{"observable":"wilson_loop[R=1,T=2]","mean":0.25,"error":null}]',
	),
	(
		"csv",
		ROWS,
		"observable;mean;error\r\nplaquette;0.5;0.01\r\nwilson_loop[R=1,T=2];0.25;<null>\r\n",
	),
	("json", {"value": np.float64(1.5), "nan": math.nan}, '{"value":1.5,"nan":null}'),
	("csv", [[1, True], [2, False]], "value0;value1\r\n1;1\r\n2;0\r\n"),
)


@pytest.mark.parametrize(("output_format", "data", "string"), output_testdata)
def test_output(output_format: str, data: Any, string: str, capsys: CaptureFixture[str]) -> None:
	config.set_values({"output_format": output_format})
	write_output(data)
	captured = capsys.readouterr()
	assert captured.out == string


def test_output_msgpack(tmp_path: Path) -> None:
	config.set_values({"output_format": "msgpack", "output_file": tmp_path / "out.msgpack"})
	write_output(ROWS)
	assert msgpack.loads((tmp_path / "out.msgpack").read_bytes()) == ROWS


def test_output_table(capsys: CaptureFixture[str]) -> None:
	config.set_values({"output_format": "table", "color": False})
	write_output(ROWS)
	out = capsys.readouterr().out
	assert out.startswith("╭")
	assert "wilson_loop[R=1,T=2]" in out
	assert "0.25" in out


def test_output_default_format(capsys: CaptureFixture[str]) -> None:
	write_output(ROWS, default_output_format="csv")
	assert capsys.readouterr().out.startswith("observable;mean;error")


def test_output_unsupported_structure() -> None:
	config.set_values({"output_format": "csv"})
	with pytest.raises(UsageError, match="does not support"):
		write_output("scalar")


@pytest.mark.parametrize(
	"config_attributes, expected_header",
	(
		(None, "observable;mean"),
		(["all"], "observable;mean;error"),
		(["error", "observable"], "error;observable"),
		(["mean", "error", "observable"], "mean;error;observable"),
	),
)
def test_attributes_ordering(config_attributes: list[str] | None, expected_header: str, capsys: CaptureFixture[str]) -> None:
	metadata = Metadata(
		attributes=[Attribute(id="observable", identifier=True), Attribute(id="mean"), Attribute(id="error", selected=False)]
	)
	config.set_values({"output_format": "csv", "attributes": config_attributes})
	write_output(ROWS, metadata)
	assert capsys.readouterr().out.splitlines()[0] == expected_header


def test_list_attributes(capsys: CaptureFixture[str]) -> None:
	config.set_values({"output_format": "csv"})
	list_attributes(Metadata(attributes=[Attribute(id="beta", data_type="float"), Attribute(id="seed", data_type="int", selected=False)]))
	assert capsys.readouterr().out == "id;type\r\nbeta;float\r\n"


def test_json_files(tmp_path: Path) -> None:
	data = {"b": [1.0, math.inf], "a": np.array([1, 2]), "path": tmp_path}
	path = tmp_path / "data.json"
	write_json_file(path, data)
	assert path.read_bytes() == dump_json(data)
	assert list(read_json_file(path)) == ["a", "b", "path"]
	assert read_json_file(path)["b"] == [1.0, None]
	assert read_json_file(path)["path"] == str(tmp_path)


def test_read_json_file_errors(tmp_path: Path) -> None:
	with pytest.raises(UsageError, match="Missing file"):
		read_json_file(tmp_path / "missing.json")
	(tmp_path / "broken.json").write_text("{", encoding="utf-8")
	with pytest.raises(UsageError, match="Invalid JSON"):
		read_json_file(tmp_path / "broken.json")


def test_record_writer(tmp_path: Path) -> None:
	path = tmp_path / "records.jsonl"
	with RecordWriter(path) as writer:
		writer.write_many({"sweep": sweep, "value": sweep / 10} for sweep in range(5))
	assert [record["sweep"] for record in read_records(path)] == [0, 1, 2, 3, 4]

	writer = RecordWriter(path).open(keep=lambda record: record["sweep"] < 3)
	writer.write({"sweep": 3, "value": -1.0})
	writer.close()
	records = list(read_records(path))
	assert [record["sweep"] for record in records] == [0, 1, 2, 3]
	assert records[-1]["value"] == -1.0

	# Opening without a predicate starts a new file
	RecordWriter(path).open().close()
	assert not list(read_records(path))


def test_read_records_errors(tmp_path: Path) -> None:
	with pytest.raises(UsageError, match="Missing measurement records"):
		list(read_records(tmp_path / "missing.jsonl"))
	path = tmp_path / "records.jsonl"
	path.write_text('{"sweep": 0}\n\n{"sweep": \n', encoding="utf-8")
	records = read_records(path)
	assert next(records) == {"sweep": 0}
	with pytest.raises(UsageError, match="line 3"):
		next(records)


def test_write_columns(tmp_path: Path) -> None:
	path = tmp_path / "potential.dat"
	write_columns(path, ["R", "V", "V_error"], [(1, 0.4, 0.01), (2, np.float64(0.7), math.nan)])
	assert path.read_text(encoding="utf-8") == "# R V V_error\n1 0.4 0.01\n2 0.7 nan\n"
