# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

general configuration

Every item keeps one value per source. The value with the highest
precedence wins: program > command line > environment > user file > system file > default.
"""

from __future__ import annotations

import os
import platform
import sys
from enum import IntEnum
from pathlib import Path
from typing import Any, Callable

from lgtcli.utils import Singleton

COMPLETION_MODE = "_LGT_CLI_COMPLETE" in os.environ

if COMPLETION_MODE:
	# Loads faster
	import click
else:
	import rich_click as click  # type: ignore[import,no-redef]

from click.core import ParameterSource  # noqa: E402
from opsicommon.logging import (  # noqa: E402
	DEFAULT_COLORED_FORMAT,
	DEFAULT_FORMAT,
	LOG_ESSENTIAL,
	LOG_NONE,
	get_logger,
	logging_config,
)
from ruamel.yaml import YAML  # noqa: E402  # type: ignore[import]
from ruamel.yaml.error import YAMLError  # noqa: E402  # type: ignore[import]

from lgtcli.types import (  # noqa: E402
	Attributes,
	Bool,
	Directory,
	File,
	LogLevel,
	OutputFormat,
	UsageError,
	WorkerCount,
)

logger = get_logger("lgtcli")

logging_config(stderr_level=LOG_ESSENTIAL, file_level=LOG_NONE)


class ConfigValueSource(IntEnum):
	DEFAULT = 0
	CONFIG_FILE_SYSTEM = 1
	CONFIG_FILE_USER = 2
	ENVIRONMENT = 3
	COMMANDLINE = 4
	PROGRAM = 5


CLICK_SOURCES = {ParameterSource.COMMANDLINE: ConfigValueSource.COMMANDLINE, ParameterSource.ENVIRONMENT: ConfigValueSource.ENVIRONMENT}
FILE_SOURCES = {"config_file_system": ConfigValueSource.CONFIG_FILE_SYSTEM, "config_file_user": ConfigValueSource.CONFIG_FILE_USER}


class ConfigValue:
	__slots__ = ("value", "source")

	def __init__(self, type_: Any, value: Any, source: ConfigValueSource) -> None:
		self.value = value if isinstance(value, type_) else type_(value)
		self.source = source

	def __repr__(self) -> str:
		return f"<ConfigValue value={self.value!r}, source={self.source.name.lower()}>"


class ConfigItem:
	def __init__(
		self,
		name: str,
		type: Any,  # pylint: disable=redefined-builtin
		description: str | None = None,
		group: str | None = None,
		default: Any = None,
		value: Any = None,
	) -> None:
		self.name = name
		self.type = type
		self.description = description
		self.group = group
		self._values: dict[ConfigValueSource, ConfigValue] = {}
		self.set_value(default, ConfigValueSource.DEFAULT)
		self.set_value(value)

	@property
	def source(self) -> ConfigValueSource | None:
		return max(self._values, default=None)

	@property
	def value(self) -> Any:
		source = self.source
		return None if source is None else self._values[source].value

	@value.setter
	def value(self, value: Any) -> None:
		self.set_value(value)

	@property
	def default(self) -> Any:
		default = self._values.get(ConfigValueSource.DEFAULT)
		return None if default is None else default.value

	def set_value(self, value: Any, source: ConfigValueSource = ConfigValueSource.PROGRAM) -> None:
		"""None removes the value of the source, the next lower source takes over."""
		if value is None:
			self._values.pop(source, None)
		else:
			self._values[source] = ConfigValue(self.type, value, source)

	def value_from(self, source: ConfigValueSource) -> Any:
		config_value = self._values.get(source)
		return None if config_value is None else config_value.value

	def reset(self, sources: list[ConfigValueSource] | None = None) -> None:
		"""Drop the values of the given sources, by default of every source except the default."""
		for source in sources or [source for source in ConfigValueSource if source is not ConfigValueSource.DEFAULT]:
			self._values.pop(source, None)

	def snapshot(self) -> dict[ConfigValueSource, ConfigValue]:
		return dict(self._values)

	def restore(self, values: dict[ConfigValueSource, ConfigValue]) -> None:
		self._values = dict(values)

	def as_dict(self) -> dict[str, Any]:
		return {
			"name": self.name,
			"group": self.group,
			"description": self.description,
			"value": self.value,
			"source": None if self.source is None else self.source.name.lower(),
			"default": self.default,
		}

	def __repr__(self) -> str:
		return f"<ConfigItem name={self.name!r}, default={self.default!r}, value={self.value!r}>"


if getattr(sys, "frozen", False) and hasattr(sys, "_MEIPASS"):
	_plugin_bundle_dir = Path(sys._MEIPASS) / "plugins"  # type: ignore[attr-defined] # pylint: disable=protected-access
else:
	_plugin_bundle_dir = Path(__file__).resolve().parent.parent / "plugins"

_plugin_system_dir = None
_config_file_system = None
if platform.system().lower() == "windows":
	_user_dir = Path(os.getenv("APPDATA") or ".") / "lgt-cli"
	_config_file_user = _user_dir / "lgt-cli.yaml"
else:
	_user_dir = Path.home() / ".local" / "lib" / "lgt-cli"
	_plugin_system_dir = Path("/var/lib/lgt-cli/plugins")
	_config_file_system = Path("/etc/lgt-cli/lgt-cli.yaml")
	_config_file_user = Path("~/.config/lgt-cli/lgt-cli.yaml")

CONFIG_ITEMS = [
	ConfigItem("log_file", File, "Log to the specified file.", "General"),
	ConfigItem(
		"log_level_file",
		LogLevel,
		f"The log level for the log file. Possible values are:\n\n{LogLevel.possible_values_for_description}.",
		"General",
		default="none",
	),
	ConfigItem(
		"log_level_stderr",
		LogLevel,
		f"The log level for the console (stderr). Possible values are:\n\n{LogLevel.possible_values_for_description}.",
		"General",
		default="none",
	),
	ConfigItem("color", Bool, "Enable or disable colorized output.", "General", default=True),
	ConfigItem("list_attributes", Bool, "List the output columns of the command instead of running it.", "General", default=False),
	ConfigItem("output_format", OutputFormat, f"Output format. Possible values are: {OutputFormat.possible_values_for_description}.", "IO", "auto"),
	ConfigItem("output_file", File, "Write the command output to the given file. If not set or set to '-', output goes to stdout.", "IO"),
	ConfigItem("quiet", Bool, "Quiet mode, no progress bars and no stderr logs.", "IO", default=False),
	ConfigItem("header", Bool, "Enable or disable the header line of tabular output.", "IO", default=True),
	ConfigItem("attributes", Attributes, "Select output columns ([metavar]all[/metavar] selects every column)", "IO"),
	ConfigItem(
		"workers",
		WorkerCount,
		"Number of threads updating the links of one checkerboard class. Results do not depend on this value.",
		"Engine",
		default=1,
	),
	ConfigItem("plugin_bundle_dir", Directory, "Bundled commands", default=_plugin_bundle_dir),
	ConfigItem("plugin_system_dir", Directory, "System wide command plugins", default=_plugin_system_dir),
	ConfigItem("plugin_user_dir", Directory, "User command plugins", default=_user_dir / "plugins"),
	ConfigItem("config_file_system", File, "System wide config file location", "General", default=_config_file_system),
	ConfigItem("config_file_user", File, "User specific config file", "General", default=_config_file_user),
]


class Config(metaclass=Singleton):
	def __init__(self) -> None:
		self._options_processed: set[str] = set()
		self._config: dict[str, ConfigItem] = {item.name: item for item in CONFIG_ITEMS}

	def get_config_item(self, name: str) -> ConfigItem:
		return self._config[name]

	def get_config_items(self) -> list[ConfigItem]:
		return list(self._config.values())

	def get_values(self) -> dict[str, Any]:
		return {name: item.value for name, item in self._config.items()}

	def set_values(self, values: dict[str, Any]) -> None:
		for name, value in values.items():
			self._config[name].set_value(value)

	def snapshot(self) -> dict[str, dict[ConfigValueSource, ConfigValue]]:
		return {name: item.snapshot() for name, item in self._config.items()}

	def restore(self, snapshot: dict[str, dict[ConfigValueSource, ConfigValue]]) -> None:
		for name, values in snapshot.items():
			self._config[name].restore(values)

	def read_config_files(self) -> None:
		"""YAML mappings of item names to values. Values from earlier reads are replaced."""
		for item in self._config.values():
			item.reset(list(FILE_SOURCES.values()))

		for file_type, source in FILE_SOURCES.items():
			config_file = getattr(self, file_type, None)
			if not config_file or not config_file.exists():
				continue
			logger.debug("Reading %s %r", file_type, config_file)
			try:
				data = YAML(typ="safe").load(config_file.read_text(encoding="utf-8")) or {}
			except YAMLError as err:
				raise UsageError(f"Invalid config file {config_file}: {err}") from err
			if not isinstance(data, dict):
				raise UsageError(f"Invalid config file {config_file}: expected a mapping of option names to values")
			for key, value in data.items():
				config_item = self._config.get(key)
				if not config_item or key in FILE_SOURCES:
					logger.warning("Ignoring unknown key %r in %s", key, config_file)
					continue
				try:
					config_item.set_value(value, source)
				except ValueError as err:
					raise UsageError(f"Invalid value for {key!r} in {config_file}: {err}") from err

	def set_logging_config(self) -> None:
		stderr_level = self.log_level_stderr
		if self.quiet and self.get_config_item("log_level_stderr").value_from(ConfigValueSource.COMMANDLINE) is None:
			stderr_level = LOG_NONE
		logging_config(
			log_file=self.log_file,
			file_level=self.log_level_file,
			stderr_level=stderr_level,
			stderr_format=DEFAULT_COLORED_FORMAT if self.color else DEFAULT_FORMAT,
		)

	def get_click_option(self, name: str, **kwargs: str | bool) -> Callable:
		config_item = self._config[name]
		long_option = str(kwargs.pop("long_option", f"--{name.replace('_', '-')}"))
		short_option = kwargs.pop("short_option", None)
		option_kwargs: dict[str, Any] = {
			"type": getattr(config_item.type, "click_type", config_item.type),
			"callback": self.process_option,
			"metavar": name.upper(),
			"envvar": f"LGTCLI_{name.upper()}",
			"help": config_item.description,
			"default": config_item.default,
			"show_default": True,
		}
		option_kwargs.update(kwargs)
		return click.option(long_option, *([str(short_option)] if short_option else []), **option_kwargs)

	def process_option(self, ctx: click.Context, param: click.Option, value: Any) -> None:
		if COMPLETION_MODE or param.name not in self._config:
			return

		source = CLICK_SOURCES.get(ctx.get_parameter_source(param.name))  # type: ignore[arg-type]
		if source:
			try:
				self._config[param.name].set_value(value, source)
			except ValueError as err:
				raise click.BadParameter(str(err), ctx=ctx, param=param) from err

		self._options_processed.add(param.name)
		if param.name in FILE_SOURCES and all(name in self._options_processed for name in FILE_SOURCES):
			self.read_config_files()

		if param.name in ("log_file", "log_level_file", "log_level_stderr", "color", "quiet"):
			self.set_logging_config()

	def get_description(self, name: str) -> str | None:
		return self._config[name].description

	def get_items_by_group(self) -> dict[str, list[ConfigItem]]:
		items: dict[str, list[ConfigItem]] = {}
		for item in self._config.values():
			items.setdefault(item.group or "", []).append(item)
		return items

	def __getattr__(self, name: str) -> Any:
		if not name.startswith("_") and name in self._config:
			return self._config[name].value
		raise AttributeError(name)

	def __setattr__(self, name: str, value: Any) -> None:
		if not name.startswith("_") and name in self._config:
			self._config[name].set_value(value)
			return
		super().__setattr__(name, value)


config = Config()
