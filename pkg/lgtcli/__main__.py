# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

Main command

Exit codes: 0 success, 1 usage errors, 2 numerical and validation failures.
"""

# pylint: disable=wrong-import-position
import re
import sys
from typing import Any, Sequence

from click.exceptions import Abort, ClickException, Exit  # type: ignore[import]
from click.exceptions import UsageError as ClickUsageError
from click.shell_completion import CompletionItem  # type: ignore[import]
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli import __version__, prepare_cli_paths
from lgtcli.config import COMPLETION_MODE, config
from lgtcli.plugin import plugin_manager
from lgtcli.types import LgtCliRuntimeError
from lgtcli.types import LogLevel as TypeLogLevel

if not COMPLETION_MODE:
	import rich_click as click  # type: ignore[import,no-redef]
	from rich_click.rich_click import (  # type: ignore[import]
		_get_rich_formatter,
		rich_abort_error,
		rich_format_error,
		rich_format_help,
	)

	from lgtcli.io import get_console
else:
	# Loads faster
	import click  # type: ignore[import,no-redef]

logger = get_logger("lgtcli")

USAGE_EXIT_CODE = 1


def option_groups() -> list[dict[str, Any]]:
	"""Help sections for the global options, one per config group."""
	groups = []
	for group, items in config.get_items_by_group().items():
		if not group:
			continue
		options = [f"--{item.name.replace('_', '-')}" for item in items]
		if group == "General":
			options.extend(["--help", "--version"])
		groups.append({"name": f"{group} options", "options": options})
	return groups


if not COMPLETION_MODE:
	click.rich_click.USE_RICH_MARKUP = True
	click.rich_click.MAX_WIDTH = 140
	click.rich_click.STYLE_USAGE = "bold cyan3"
	click.rich_click.STYLE_OPTION = "bold cyan"
	click.rich_click.STYLE_SWITCH = "bold light_sea_green"
	click.rich_click.STYLE_METAVAR = "cyan3"
	click.rich_click.STYLE_ERRORS_SUGGESTION = ""
	click.rich_click.OPTION_GROUPS = {"lgt-cli": option_groups()}


def exit_code_for(err: BaseException) -> int:
	if isinstance(err, LgtCliRuntimeError):
		return err.exit_code
	if isinstance(err, ClickUsageError):
		return USAGE_EXIT_CODE
	if isinstance(err, ClickException):
		return err.exit_code
	return 1


def render_error(err: Exception) -> None:
	"""Print the error to stderr, with rich-click formatting when colors are enabled."""
	aborted = isinstance(err, Abort)
	click_error = err if isinstance(err, ClickException) else ClickException(str(err))
	err_console = get_console(file=sys.stderr)
	if not config.color:
		err_console.print("Aborted." if aborted else f"Error: {click_error.format_message()}")
		return
	click_error.message = re.sub(r"\[/?metavar\]", "", click_error.message)
	formatter = _get_rich_formatter()
	formatter._console = err_console
	formatter.config.highlighter = lambda x: x  # type: ignore[assignment]
	if aborted:
		rich_abort_error()
	else:
		rich_format_error(click_error)


# https://click.palletsprojects.com/en/8.1.x/commands/#custom-multi-commands
class LgtCLI(click.MultiCommand):  # type: ignore
	def main(
		self,
		args: Sequence[str] | None = None,
		prog_name: str | None = None,
		complete_var: str | None = None,
		standalone_mode: bool = False,
		**extra: Any,
	) -> Any:
		try:
			return super().main(args, prog_name, complete_var, standalone_mode, **extra)
		except Exit as err:
			if err.exit_code:
				sys.exit(err.exit_code)
			return None
		except Exception as err:
			# Known errors are logged without traceback
			logger.error(err, exc_info=not isinstance(err, (LgtCliRuntimeError, ClickException)))
			render_error(err)
			sys.exit(exit_code_for(err))

	def format_help(self, ctx: click.Context, formatter: click.HelpFormatter) -> None:
		# Config files are read while processing the eager file options, which click skips when the command is missing
		config.read_config_files()
		if not config.color or "rich_format_help" not in globals():
			return super().format_help(ctx, formatter)
		return rich_format_help(self, ctx, formatter)

	def list_commands(self, ctx: click.Context) -> list[str]:
		return plugin_manager.plugins

	def get_command(self, ctx: click.Context, cmd_name: str) -> click.Command:
		logger.debug("get_command %r", cmd_name)
		prepare_cli_paths()
		plugin = plugin_manager.load_plugin(cmd_name)
		if plugin.cli:
			return plugin.cli
		raise RuntimeError(f"Plugin {cmd_name} appears to be broken.")


class LogLevel(click.ParamType):
	def shell_complete(self, ctx: click.Context, param: click.Parameter, incomplete: str) -> list[CompletionItem]:
		try:
			return [CompletionItem(min(9, max(0, int(incomplete))))]
		except ValueError:
			return [CompletionItem(name) for name in TypeLogLevel.possible_values if name.startswith(incomplete.lower())]


@click.command(cls=LgtCLI)
@click.version_option(f"{__version__}", message="lgt-cli version %(version)s")
@config.get_click_option("config_file_system", is_eager=True, expose_value=False)
@config.get_click_option("config_file_user", is_eager=True, expose_value=False)
@config.get_click_option("log_file")
@config.get_click_option("log_level_file")
@config.get_click_option("log_level_stderr", short_option="-l")
@config.get_click_option("color", long_option="--color/--no-color", is_eager=True)
@config.get_click_option("quiet", is_flag=True)
@config.get_click_option("output_format")
@config.get_click_option("output_file")
@config.get_click_option("header", long_option="--header/--no-header")
@config.get_click_option("attributes", show_default=False, help=f"{config.get_description('attributes')}. Comma separated list.")
@config.get_click_option("list_attributes", expose_value=False, is_flag=True)
@config.get_click_option("workers", short_option="-w")
def main(*args: str, **kwargs: str) -> None:
	"""
	lattice gauge theory command line interface\n
	Monte Carlo runs, beta scans, exact reference values and report files.
	Commands are loaded from plugin directories.
	"""
	logger.debug("Main called")
	prepare_cli_paths()


if __name__ == "__main__":
	main()
