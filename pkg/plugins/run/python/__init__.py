"""
lgt-cli run plugin
"""

import sys
from contextlib import nullcontext
from pathlib import Path

import rich_click as click  # type: ignore[import]
from opsicommon.logging import get_logger  # type: ignore[import]
from rich.progress import Progress

from lgtcli.config import config
from lgtcli.decorators import handle_list_attributes
from lgtcli.experiment import ExperimentConfig, RunResult, run_experiment
from lgtcli.io import get_console, write_output
from lgtcli.plugin import LgtCliPlugin
from lgtcli.utils import ProgressCallbackAdapter
from plugins.run.data.metadata import command_metadata

__version__ = "1.0.0"
__description__ = "Run a Monte Carlo experiment"


logger = get_logger("lgtcli")


def result_rows(result: RunResult) -> list[dict]:
	return [
		{
			"observable": key,
			"mean": entry["mean"],
			"error": entry["error"],
			"tau_int": entry["tau_int"],
			"cut": entry["common_cut"],
			"bin_size": entry["bin_size"],
			"count": entry["count"],
		}
		for key, entry in result.summary["observables"].items()
	]


@click.command(name="run", short_help="Run a Monte Carlo experiment")
@click.version_option(__version__, message="lgt-cli plugin run, version %(version)s")
@click.option(
	"--config",
	"config_file",
	help="Experiment file (INI or YAML)",
	type=click.Path(exists=True, dir_okay=False, path_type=Path),
	required=True,
)
@click.option(
	"--resume",
	help="Continue from this checkpoint, the run directory keeps its earlier records",
	type=click.Path(exists=True, dir_okay=False, path_type=Path),
	default=None,
)
@click.pass_context
@handle_list_attributes
def cli(ctx: click.Context, config_file: Path, resume: Path | None) -> None:
	"""
	lgt-cli run command.
	Thermalizes and measures one chain as described by the experiment file,
	writes measurement records, checkpoints, summary and fits to the output directory
	and prints the summary of every observable.
	"""
	logger.trace("run command")
	experiment = ExperimentConfig.from_file(config_file, workers=config.workers)
	with nullcontext() if config.quiet else Progress(console=get_console(file=sys.stderr)) as progress:  # type: ignore[attr-defined]
		callback = None
		if not config.quiet:
			callback = ProgressCallbackAdapter(progress, "[cyan]Sweeping...").progress_callback
		result = run_experiment(experiment, resume=resume, progress_callback=callback)
	write_output(result_rows(result), metadata=command_metadata.get("run"), default_output_format="table")


class RunPlugin(LgtCliPlugin):
	name: str = "Run"
	description: str = __description__
	version: str = __version__
	cli = cli
	flags: list[str] = []
