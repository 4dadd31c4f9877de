# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

decorators
"""

from __future__ import annotations

import importlib
from functools import wraps
from typing import Any, Callable

import rich_click as click  # type: ignore[import]

from lgtcli.config import config
from lgtcli.io import list_attributes


def handle_list_attributes(func: Callable) -> Callable:
	"""
	Print the output columns of the command instead of running it when --list-attributes is set.
	"""

	@wraps(func)
	def wrapper_func(ctx: click.Context, *args: Any, **kwargs: Any) -> Any:
		if config.list_attributes:
			command_sequence = "_".join(ctx.command_path.split(" ")[1:])
			plugin_name = command_sequence.split("_")[0]
			module = importlib.import_module(f"plugins.{plugin_name}.data.metadata")
			command_metadata = getattr(module, "command_metadata")
			metadata = command_metadata.get(command_sequence)
			if metadata:
				list_attributes(metadata)
				ctx.exit()
		return func(ctx, *args, **kwargs)

	return wrapper_func
