"""
lgt-cli report plugin
"""

from pathlib import Path

import rich_click as click  # type: ignore[import]
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.decorators import handle_list_attributes
from lgtcli.experiment import write_report
from lgtcli.io import write_output
from lgtcli.plugin import LgtCliPlugin
from plugins.report.data.metadata import command_metadata

__version__ = "1.0.0"
__description__ = "Write plotting column files of a run or scan directory"


logger = get_logger("lgtcli")


@click.command(name="report", short_help="Write column files for plotting")
@click.version_option(__version__, message="lgt-cli plugin report, version %(version)s")
@click.option(
	"--dir",
	"directory",
	help="Run or scan output directory",
	type=click.Path(exists=True, file_okay=False, path_type=Path),
	required=True,
)
@click.pass_context
@handle_list_attributes
def cli(ctx: click.Context, directory: Path) -> None:
	"""
	lgt-cli report command.
	Writes potential.dat, correlation.dat and loops_area.dat for runs
	and scan.dat for scans. Running it twice gives identical files.
	"""
	logger.trace("report command")
	written = write_report(directory)
	write_output([{"file": str(path)} for path in written], metadata=command_metadata.get("report"), default_output_format="table")


class ReportPlugin(LgtCliPlugin):
	name: str = "Report"
	description: str = __description__
	version: str = __version__
	cli = cli
	flags: list[str] = []
