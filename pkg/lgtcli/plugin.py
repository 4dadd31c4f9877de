# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

plugin handling

A command is a directory <name>/python/__init__.py in one of the plugin
directories, the first directory containing the name wins.
"""

from __future__ import annotations

import importlib.util
import sys
from pathlib import Path
from types import ModuleType

from click import Command  # type: ignore[import]
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.config import COMPLETION_MODE, config
from lgtcli.types import UsageError
from lgtcli.utils import Singleton

logger = get_logger("lgtcli")

MODULE_PREFIX = "lgtcli.addon"


class LgtCliPlugin:
	name: str = ""
	description: str = ""
	version: str = ""
	cli: Command | None = None
	flags: list[str] = []

	def __init__(self, path: Path) -> None:
		self.path = path
		self.data_path = self.path / "data"

	def on_load(self) -> None:
		"""Called after loading the plugin"""
		return

	def __str__(self) -> str:
		return f"{self.path.name}_{self.version}({self.flags})"


def plugin_module_name(plugin_dir: Path) -> str:
	# Plugins of the same name in different directories get distinct modules
	return f"{MODULE_PREFIX}_{str(plugin_dir).encode('utf-8').hex()}"


class PluginManager(metaclass=Singleton):
	@property
	def plugin_dirs(self) -> list[Path]:
		return [path for path in (config.plugin_bundle_dir, config.plugin_system_dir, config.plugin_user_dir) if path and path.exists()]

	@property
	def plugins(self) -> list[str]:
		names: set[str] = set()
		for plugin_base_dir in self.plugin_dirs:
			names.update(path.parent.parent.name for path in plugin_base_dir.glob("*/python/__init__.py"))
		return sorted(names)

	def get_plugin_dir(self, name: str) -> Path:
		for plugin_base_dir in self.plugin_dirs:
			if (plugin_base_dir / name / "python" / "__init__.py").exists():
				logger.debug("Found plugin %s in %s", name, plugin_base_dir)
				return plugin_base_dir / name
		raise UsageError(f"Invalid command {name!r}, available commands: {', '.join(self.plugins)}")

	def load_plugin_module(self, plugin_dir: Path) -> ModuleType:
		module_name = plugin_module_name(plugin_dir)
		if module_name in sys.modules:
			return sys.modules[module_name]
		spec = importlib.util.spec_from_file_location(module_name, plugin_dir / "python" / "__init__.py")
		if not spec or not spec.loader:
			raise RuntimeError(f"Failed to load plugin from '{plugin_dir}'.")
		module = importlib.util.module_from_spec(spec)
		sys.modules[module_name] = module
		try:
			spec.loader.exec_module(module)
		except Exception:
			del sys.modules[module_name]
			raise
		return module

	def load_plugin(self, name: str) -> LgtCliPlugin:
		plugin_dir = self.get_plugin_dir(name)
		module = self.load_plugin_module(plugin_dir)
		plugin_classes = [
			obj for obj in vars(module).values() if isinstance(obj, type) and issubclass(obj, LgtCliPlugin) and obj is not LgtCliPlugin
		]
		if not plugin_classes:
			raise RuntimeError(f"Failed to load plugin '{name}'.")
		# One plugin class per module
		plugin = plugin_classes[0](plugin_dir)
		logger.info("Loaded plugin %r (name=%s, version=%s)", name, plugin.name, plugin.version)
		if not COMPLETION_MODE:
			plugin.on_load()
		return plugin


plugin_manager = PluginManager()
