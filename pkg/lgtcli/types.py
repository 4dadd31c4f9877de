# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

types
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Type

from lgtcli.config import COMPLETION_MODE

if not COMPLETION_MODE:  # type: ignore[has-type]
	import rich_click as click  # type: ignore[import]
else:
	# Loads faster
	import click  # type: ignore[import,no-redef]

from opsicommon.logging import (  # type: ignore[import]
	LEVEL_TO_OPSI_LEVEL,
	NAME_TO_LEVEL,
)


class LogLevel(int):
	possible_values = list(reversed([v.lower() for v in NAME_TO_LEVEL]))
	possible_values_for_description = ", ".join(
		[f"[metavar]{name}[/metavar]/[metavar]{LEVEL_TO_OPSI_LEVEL[NAME_TO_LEVEL[name.upper()]]}[/metavar]" for name in possible_values]
	)

	def __new__(cls, value: Any) -> LogLevel:
		try:
			value = min(9, max(0, int(value)))
		except ValueError:
			try:
				value = LEVEL_TO_OPSI_LEVEL[NAME_TO_LEVEL[value.upper()]]
			except KeyError:
				raise ValueError(f"{value!r} is not a valid log level, choose one of: {cls.possible_values_for_description}") from None
		return super().__new__(cls, value)


class OutputFormat(str):
	possible_values = ["auto", "json", "pretty-json", "msgpack", "table", "csv"]
	possible_values_for_description = ", ".join([f"[metavar]{v}[/metavar]" for v in possible_values])

	def __new__(cls: Type[OutputFormat], value: Any) -> OutputFormat:
		value = str(value)
		if value not in cls.possible_values:
			raise ValueError(f"{value!r} is not a valid output format, choose one of: {cls.possible_values_for_description}") from None
		return super().__new__(cls, value)


class WorkerCount(int):
	"""Number of threads used to update the links of one checkerboard class."""

	click_type = int

	def __new__(cls: Type[WorkerCount], value: Any) -> WorkerCount:
		try:
			value = int(value)
		except (TypeError, ValueError):
			raise ValueError(f"{value!r} is not a valid worker count") from None
		if value < 1:
			raise ValueError(f"Worker count must be at least 1, got {value}")
		return super().__new__(cls, value)


class Attributes(list):
	"""Output columns, a list or a comma separated string. Repeated names are kept once."""

	def __init__(self, value: list | str) -> None:
		names = value.split(",") if isinstance(value, str) else value
		super().__init__(dict.fromkeys(str(name).strip() for name in names if str(name).strip()))


class Bool:
	click_type = bool
	true_values = ("1", "true", "yes", "on")
	false_values = ("0", "false", "no", "off", "")

	def __new__(cls: Type[Bool], value: Any) -> bool:  # type: ignore[misc]
		if not isinstance(value, str):
			return bool(value)
		if value.strip().lower() in cls.true_values:
			return True
		if value.strip().lower() in cls.false_values:
			return False
		raise ValueError(f"{value!r} is not a boolean, use one of: {', '.join(cls.true_values + cls.false_values[:-1])}")


class File(type(Path())):  # type: ignore[misc] # pylint: disable=too-few-public-methods
	"""Absolute file path, '-' stands for stdout."""

	click_type = click.Path(dir_okay=False)

	def __new__(cls: Type[File], *args: Any, **kwargs: Any) -> File:
		path = super().__new__(cls, *args, **kwargs)
		if str(path) == "-":
			return path
		path = path.expanduser().absolute()
		if path.is_dir():
			raise ValueError(f"Expected a file, {str(path)!r} is a directory")
		return path


class Directory(type(Path())):  # type: ignore[misc] # pylint: disable=too-few-public-methods
	click_type = click.Path(file_okay=False)

	def __new__(cls: Type[Directory], *args: Any, **kwargs: Any) -> Directory:
		path = super().__new__(cls, *args, **kwargs).expanduser().absolute()
		if path.exists() and not path.is_dir():
			raise ValueError(f"Expected a directory, {str(path)!r} is a file")
		return path


class LgtCliRuntimeError(RuntimeError):
	exit_code = 1


class UsageError(LgtCliRuntimeError):
	"""Invalid input: parameters, shapes, configuration or unsupported combinations."""

	exit_code = 1


class UnsupportedAlgorithmError(UsageError):
	pass


class ExperimentConfigError(UsageError):
	def __init__(self, section: str, key: str | None, problem: str) -> None:
		self.section = section
		self.key = key
		self.problem = problem
		location = f"[{section}] {key}" if key else f"[{section}]"
		super().__init__(f"{location}: {problem}")


class NumericalError(LgtCliRuntimeError):
	"""Numerical failure inside the engine."""

	exit_code = 2


class NumericalDriftError(NumericalError):
	pass


class GroupInvariantError(NumericalError):
	pass


class UndefinedRatioError(NumericalError):
	pass


class ValidationFailure(NumericalError):
	"""An exact cross-check disagreed with the Monte Carlo estimate."""
