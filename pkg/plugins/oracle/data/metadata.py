"""
lgt-cli - lattice gauge theory command line interface

This module contains the metadata for the oracle plugin. The metadata includes information about the output columns.
"""

from lgtcli.io import Attribute, Metadata

command_metadata = {
	"oracle": Metadata(
		attributes=[
			Attribute(id="quantity", description="Reference quantity", identifier=True, data_type="str"),
			Attribute(id="group", description="Gauge group", data_type="str"),
			Attribute(id="beta", description="Inverse coupling", data_type="float"),
			Attribute(id="observable", description="Enumerated observable", data_type="str", selected=False),
			Attribute(id="R", description="Loop extent in the first plane direction", data_type="int"),
			Attribute(id="T", description="Loop extent in the second plane direction", data_type="int"),
			Attribute(id="value", description="Reference value", data_type="float"),
		]
	),
	"oracle_bch": Metadata(
		attributes=[
			Attribute(id="epsilon", description="Lattice spacing", identifier=True, data_type="float"),
			Attribute(id="connection", description="Smooth connection", data_type="str"),
			Attribute(id="lattice_sum", description="Wilson action of the discretized connection", data_type="float"),
			Attribute(id="continuum_integral", description="Rescaled continuum Yang-Mills action", data_type="float"),
			Attribute(id="ratio", description="Lattice sum over continuum integral", data_type="float"),
			Attribute(id="max_plaquette_deviation", description="Largest relative deviation of one plaquette", data_type="float"),
			Attribute(id="order", description="Observed convergence order towards the next finer spacing", data_type="float"),
			Attribute(id="plaquettes", description="Number of plaquettes", data_type="int", selected=False),
		]
	),
}
