"""
lgt-cli scan plugin
"""

import sys
from contextlib import nullcontext
from pathlib import Path

import rich_click as click  # type: ignore[import]
from opsicommon.logging import get_logger  # type: ignore[import]
from rich.progress import Progress

from lgtcli.config import config
from lgtcli.decorators import handle_list_attributes
from lgtcli.experiment import ExperimentConfig, scan_experiment
from lgtcli.io import get_console, write_output
from lgtcli.plugin import LgtCliPlugin
from lgtcli.utils import ProgressCallbackAdapter
from plugins.scan.data.metadata import command_metadata

__version__ = "1.0.0"
__description__ = "Run an experiment for every coupling of a scan list"


logger = get_logger("lgtcli")


@click.command(name="scan", short_help="Scan a list of couplings")
@click.version_option(__version__, message="lgt-cli plugin scan, version %(version)s")
@click.option(
	"--config",
	"config_file",
	help="Experiment file with a [scan] section",
	type=click.Path(exists=True, dir_okay=False, path_type=Path),
	required=True,
)
@click.pass_context
@handle_list_attributes
def cli(ctx: click.Context, config_file: Path) -> None:
	"""
	lgt-cli scan command.
	Runs one experiment per coupling in beta_<index> directories below the output
	directory and writes scan_table.json. Failing points are reported and skipped.
	Every point gets its own seed derived from the master seed, a single coupling
	keeps the master seed and measures the same records as run.
	"""
	logger.trace("scan command")
	experiment = ExperimentConfig.from_file(config_file, workers=config.workers)
	with nullcontext() if config.quiet else Progress(console=get_console(file=sys.stderr)) as progress:  # type: ignore[attr-defined]
		callback = None
		if not config.quiet:
			callback = ProgressCallbackAdapter(progress, "[cyan]Scanning...").progress_callback
		rows = scan_experiment(experiment, progress_callback=callback)
	failed = [row for row in rows if row["status"] != "ok"]
	if failed:
		logger.warning("%d of %d scan points failed", len(failed), len(rows))
	write_output(rows, metadata=command_metadata.get("scan"), default_output_format="table")


class ScanPlugin(LgtCliPlugin):
	name: str = "Scan"
	description: str = __description__
	version: str = __version__
	cli = cli
	flags: list[str] = []
