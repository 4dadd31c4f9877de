"""
lgt-cli oracle plugin
"""

from typing import Any

import rich_click as click  # type: ignore[import]
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.config import config
from lgtcli.decorators import handle_list_attributes
from lgtcli.group_algebra import GroupId
from lgtcli.io import write_output
from lgtcli.lattice_geometry import Boundary, LatticeShape
from lgtcli.oracle import (
	CONNECTION_NAMES,
	TinyObservable,
	TinyQuantity,
	bch_action_check,
	catalog_connection,
	convergence_orders,
	exact_tiny_lattice,
	single_plaquette_expectation,
	strong_coupling_leading,
	two_dim_exact_loop,
)
from lgtcli.plugin import LgtCliPlugin
from lgtcli.types import UsageError
from plugins.oracle.data.metadata import command_metadata

__version__ = "1.0.0"
__description__ = "Exact and asymptotic reference values"

QUANTITIES = ("w1", "loop2d", "strong", "enumerate", "bch")

logger = get_logger("lgtcli")


def parse_plane(value: str | None) -> tuple[int, int] | None:
	if not value:
		return None
	try:
		mu, nu = (int(part) for part in value.split("-"))
	except ValueError:
		raise UsageError(f"Invalid plane {value!r}, expected e.g. 0-1") from None
	return mu, nu


def bch_rows(connection_name: str, ndims: int, epsilons: tuple[float, ...], box: tuple[float, ...]) -> list[dict[str, Any]]:
	connection = catalog_connection(connection_name, ndims)
	checks = [bch_action_check(connection, epsilon, box or (1.0,) * ndims) for epsilon in sorted(epsilons, reverse=True)]
	orders = convergence_orders(checks) + [None]
	return [{**check.as_dict(), "order": order} for check, order in zip(checks, orders)]


@click.command(name="oracle", short_help="Exact and asymptotic reference values")
@click.version_option(__version__, message="lgt-cli plugin oracle, version %(version)s")
@click.option("--quantity", type=click.Choice(QUANTITIES), default="w1", show_default=True, help="Reference quantity")
@click.option("--group", type=click.Choice([group.value for group in GroupId], case_sensitive=False), default="SU2", show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True, help="Inverse coupling")
@click.option("-r", "--r", "r", type=int, default=1, show_default=True, help="Loop extent R")
@click.option("-t", "--t", "t", type=int, default=1, show_default=True, help="Loop extent T")
@click.option("--extents", type=str, default="2,2", show_default=True, help="Lattice extents for enumeration, comma separated")
@click.option("--boundary", type=click.Choice([boundary.value for boundary in Boundary]), default="periodic", show_default=True)
@click.option(
	"--observable",
	type=click.Choice([quantity.value for quantity in TinyQuantity]),
	default="plaquette",
	show_default=True,
	help="Enumerated observable",
)
@click.option("--plane", type=str, default=None, help="Loop plane for enumeration, e.g. 0-1 (default: all planes)")
@click.option("--separation", type=int, default=0, show_default=True, help="Plaquette separation for the enumerated correlation")
@click.option("--axis", type=int, default=None, help="Separation axis for the enumerated correlation (default: last)")
@click.option("--connection", type=click.Choice(CONNECTION_NAMES), default="su2-trig", show_default=True, help="Smooth connection for bch")
@click.option("--ndims", type=int, default=2, show_default=True, help="Dimension of the smooth connection for bch")
@click.option("--epsilon", "epsilons", type=float, multiple=True, default=(0.25, 0.125, 0.0625), show_default=True, help="Lattice spacings for bch")
@click.option("--box", type=float, multiple=True, default=(), help="Box extents for bch, one per dimension (default: unit box)")
@click.pass_context
@handle_list_attributes
def cli(  # pylint: disable=too-many-arguments
	ctx: click.Context,
	quantity: str,
	group: str,
	beta: float,
	r: int,
	t: int,
	extents: str,
	boundary: str,
	observable: str,
	plane: str | None,
	separation: int,
	axis: int | None,
	connection: str,
	ndims: int,
	epsilons: tuple[float, ...],
	box: tuple[float, ...],
) -> None:
	"""
	lgt-cli oracle command.
	Prints the single plaquette expectation (w1), exact two dimensional loops (loop2d),
	the leading strong coupling loop (strong), exact Z2 enumeration on tiny lattices
	(enumerate) or the lattice versus continuum action of a smooth connection (bch).
	"""
	logger.trace("oracle command")
	group_id = GroupId.parse(group)
	if quantity == "bch":
		write_output(bch_rows(connection, ndims, epsilons, box), metadata=command_metadata.get("oracle_bch"), default_output_format="table")
		return

	row: dict[str, Any] = {"quantity": quantity, "group": group_id.value, "beta": beta, "observable": None, "R": None, "T": None}
	if quantity == "w1":
		row["value"] = single_plaquette_expectation(group_id, beta)
	elif quantity in ("loop2d", "strong"):
		function = two_dim_exact_loop if quantity == "loop2d" else strong_coupling_leading
		row.update({"R": r, "T": t, "value": function(group_id, beta, r, t)})
	else:
		try:
			extent_values = tuple(int(value) for value in extents.split(","))
		except ValueError:
			raise UsageError(f"Invalid extents {extents!r}") from None
		shape = LatticeShape(len(extent_values), extent_values, Boundary.parse(boundary))
		tiny = TinyObservable(TinyQuantity(observable), r=r, t=t, plane=parse_plane(plane), separation=separation, axis=axis)
		row.update({"observable": observable, "value": exact_tiny_lattice(shape, beta, tiny, group_id, workers=config.workers)})
		if tiny.quantity is TinyQuantity.WILSON_LOOP:
			row.update({"R": r, "T": t})
	write_output([row], metadata=command_metadata.get("oracle"), default_output_format="table")


class OraclePlugin(LgtCliPlugin):
	name: str = "Oracle"
	description: str = __description__
	version: str = __version__
	cli = cli
	flags: list[str] = []
