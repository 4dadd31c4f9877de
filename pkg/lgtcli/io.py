# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

input output
"""

from __future__ import annotations

import csv
import inspect
import sys
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Iterator

import msgpack  # type: ignore[import]
import numpy as np
import orjson
from opsicommon.logging import get_logger  # type: ignore[import]
from rich import print_json  # type: ignore[import]
from rich.console import Console  # type: ignore[import]
from rich.table import Table, box  # type: ignore[import]

from lgtcli.config import config
from lgtcli.types import UsageError

logger = get_logger("lgtcli")

JSON_OPTIONS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS


@dataclass
class Attribute:
	id: str
	description: str | None = None
	identifier: bool = False
	selected: bool = True
	data_type: str | None = None

	def as_dict(self) -> dict[str, str | bool]:
		return asdict(self)


@dataclass
class Metadata:
	attributes: list[Attribute] = field(default_factory=list)

	def as_dict(self) -> dict[str, Any]:
		return asdict(self)


def get_attributes(data: list[dict[str, Any]], all_elements: bool = True) -> list[str]:
	attributes: list[str] = []
	for element in data:
		attributes.extend(key for key in element if key not in attributes)
		if not all_elements:
			break
	return attributes


def get_structure_type(data: list | dict) -> type[list] | type[dict] | None:
	if isinstance(data, list):
		if data and isinstance(data[0], list):
			return list[list]
		if data and isinstance(data[0], dict):
			return list[dict]
		return list
	if isinstance(data, dict):
		return dict
	return None


def to_serializable(value: Any) -> Any:
	if isinstance(value, np.generic):
		return value.item()
	if isinstance(value, Path):
		return str(value)
	if inspect.isclass(value):
		return value.__name__
	return str(value)


def output_file_is_stdout() -> bool:
	return not config.output_file or str(config.output_file) == "-"


def output_file_is_a_tty() -> bool:
	if output_file_is_stdout():
		return sys.stdout.isatty()
	return False


@contextmanager
def output_file_bin() -> Iterator[IO[bytes]]:
	if output_file_is_stdout():
		yield sys.stdout.buffer
		sys.stdout.flush()
	else:
		with open(config.output_file, mode="wb") as file:
			yield file
			file.flush()


@contextmanager
def output_file_str(encoding: str | None = "utf-8") -> Iterator[IO[str]]:
	encoding = encoding or "utf-8"
	if output_file_is_stdout():
		yield sys.stdout
		sys.stdout.flush()
	else:
		with open(config.output_file, mode="w", encoding=encoding) as file:
			yield file
			file.flush()


class QuietConsole(Console):
	def print(self, *args: Any, **kwargs: Any) -> None:
		"""
		Override get_console.print() method to not print anything
		"""
		pass


def get_console(file: IO[str] | None = None, ignore_quiet: bool = False) -> Console:
	if file is not sys.stderr and config.quiet and not ignore_quiet:
		return QuietConsole(file=file, color_system="auto" if config.color else None)
	return Console(file=file, color_system="auto" if config.color else None)


def _selected(metadata: Metadata) -> list[str]:
	attributes = config.attributes or []
	return [
		attribute.id
		for attribute in metadata.attributes
		if attributes == ["all"] or attribute.id in attributes or (not attributes and attribute.selected)
	]


def write_output_table(data: Any, metadata: Metadata) -> None:
	def to_string(value: Any) -> str:
		if value is None:
			return ""
		if isinstance(value, bool):
			return "true" if value else "false"
		if isinstance(value, float):
			return f"{value:.10g}"
		if isinstance(value, (list, tuple)):
			return ", ".join([to_string(v) for v in value])
		return str(value)

	table = Table(box=box.ROUNDED, show_header=config.header, show_lines=False)
	row_ids = _selected(metadata)
	identifiers = {attribute.id for attribute in metadata.attributes if attribute.identifier}
	for row_id in row_ids:
		table.add_column(header=row_id, style="cyan" if row_id in identifiers else None, no_wrap=row_id in identifiers)

	for row in data:
		if isinstance(row, dict):
			table.add_row(*[to_string(row.get(rid)) for rid in row_ids])
		elif isinstance(row, list):
			table.add_row(*[to_string(el) for el in row])
		else:
			table.add_row(*[to_string(row)])

	with output_file_str() as file:
		console = get_console(file, ignore_quiet=True)
		console.print(table)


def write_output_csv(data: Any, metadata: Metadata) -> None:
	def to_string(value: Any) -> str:
		if value is None:
			return "<null>"
		if isinstance(value, bool):
			return "1" if value else "0"
		if isinstance(value, (list, tuple)):
			return ",".join([to_string(v) for v in value])
		return str(value)

	with output_file_str() as file:
		writer = csv.writer(file, delimiter=";", quotechar='"', quoting=csv.QUOTE_MINIMAL)
		row_ids = _selected(metadata)
		if config.header:
			writer.writerow(row_ids)
		for row in data:
			if isinstance(row, dict):
				writer.writerow([to_string(row.get(rid)) for rid in row_ids])
			elif isinstance(row, list):
				writer.writerow([to_string(el) for el in row])
			else:
				writer.writerow([to_string(row)])


def write_output_json(data: Any, pretty: bool = False) -> None:
	option = JSON_OPTIONS
	if pretty and not output_file_is_a_tty():
		option |= orjson.OPT_APPEND_NEWLINE | orjson.OPT_INDENT_2

	json = orjson.dumps(data, default=to_serializable, option=option)

	if pretty and output_file_is_a_tty():
		print_json(json.decode("utf-8"), highlight=config.color)
	else:
		with output_file_bin() as file:
			file.write(json)


def write_output_msgpack(data: Any) -> None:
	with output_file_bin() as file:
		file.write(msgpack.dumps(data, default=to_serializable))


def write_output(data: Any, metadata: Metadata | None = None, default_output_format: str | None = None) -> None:
	output_format = config.output_format
	if output_format == "auto":
		output_format = default_output_format if default_output_format else "table"

	if output_format in ("table", "csv") and not metadata:
		stt = get_structure_type(data)
		if stt == list:  # noqa: E721
			metadata = Metadata(attributes=[Attribute(id="value0")])
		elif stt == list[list]:
			metadata = Metadata(attributes=[Attribute(id=f"value{idx}") for idx in range(len(data[0]))])
		elif stt == list[dict]:
			metadata = Metadata(attributes=[Attribute(id=key) for key in get_attributes(data)])
		else:
			raise UsageError(f"Output-format {output_format!r} does not support structure {stt!r}")

	if metadata is not None and config.attributes and config.attributes != ["all"]:
		ordered_list = [attr for config_attribute in config.attributes for attr in metadata.attributes if attr.id == config_attribute]
		remaining_list = [attr for attr in metadata.attributes if attr.id not in config.attributes]
		metadata = Metadata(attributes=ordered_list + remaining_list)

	if output_format == "table":
		assert metadata
		write_output_table(data, metadata)
	elif output_format == "csv":
		assert metadata
		write_output_csv(data, metadata)
	elif output_format in ("json", "pretty-json"):
		write_output_json(data, output_format == "pretty-json")
	elif output_format == "msgpack":
		write_output_msgpack(data)
	else:
		raise ValueError(f"Invalid output-format: {output_format}")


def list_attributes(data: Metadata) -> None:
	attributes_list = [
		{"id": attribute.id, "type": attribute.data_type} for attribute in data.attributes if attribute.selected is not False
	]
	write_output(attributes_list, None, "table")


def dump_json(data: Any, pretty: bool = True) -> bytes:
	option = JSON_OPTIONS | orjson.OPT_SORT_KEYS
	if pretty:
		option |= orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE
	return orjson.dumps(data, default=to_serializable, option=option)


def write_json_file(path: Path, data: Any, pretty: bool = True) -> None:
	"""Sorted keys, so equal data gives byte-identical files."""
	Path(path).write_bytes(dump_json(data, pretty))
	logger.debug("Wrote %s", path)


def read_json_file(path: Path) -> Any:
	path = Path(path)
	try:
		return orjson.loads(path.read_bytes())
	except FileNotFoundError:
		raise UsageError(f"Missing file {path}") from None
	except orjson.JSONDecodeError as err:
		raise UsageError(f"Invalid JSON in {path}: {err}") from err


class RecordWriter:
	"""
	Newline delimited JSON records. Opening with ``keep`` set truncates the file
	to the records accepted by the predicate, which is how a resumed run drops
	records written after its checkpoint.
	"""

	def __init__(self, path: Path) -> None:
		self.path = Path(path)
		self._file: IO[bytes] | None = None

	def open(self, keep: Any = None) -> RecordWriter:
		kept: list[bytes] = []
		if keep is not None and self.path.exists():
			kept = [line + b"\n" for line in self.path.read_bytes().splitlines() if line and keep(orjson.loads(line))]
		self._file = open(self.path, mode="wb")
		self._file.writelines(kept)
		return self

	def write(self, record: dict[str, Any]) -> None:
		assert self._file, "RecordWriter not opened"
		self._file.write(orjson.dumps(record, default=to_serializable, option=JSON_OPTIONS | orjson.OPT_APPEND_NEWLINE))

	def write_many(self, records: Iterable[dict[str, Any]]) -> None:
		for record in records:
			self.write(record)

	def flush(self) -> None:
		if self._file:
			self._file.flush()

	def close(self) -> None:
		if self._file:
			self._file.close()
			self._file = None

	def __enter__(self) -> RecordWriter:
		if not self._file:
			self.open()
		return self

	def __exit__(self, *args: Any) -> None:
		self.close()


def read_records(path: Path) -> Iterator[dict[str, Any]]:
	path = Path(path)
	if not path.exists():
		raise UsageError(f"Missing measurement records {path}")
	with open(path, mode="rb") as file:
		for number, line in enumerate(file, start=1):
			if not line.strip():
				continue
			try:
				yield orjson.loads(line)
			except orjson.JSONDecodeError as err:
				raise UsageError(f"Invalid record in {path} line {number}: {err}") from err


def write_columns(path: Path, columns: list[str], rows: Iterable[Iterable[Any]]) -> None:
	"""Whitespace separated columns with a ``#`` header line."""
	lines = ["# " + " ".join(columns)]
	for row in rows:
		lines.append(" ".join(_format_column(value) for value in row))
	Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
	logger.debug("Wrote %s", path)


def _format_column(value: Any) -> str:
	if isinstance(value, (float, np.floating)):
		return repr(float(value))
	return str(value)
