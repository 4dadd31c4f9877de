"""
lgt-cli - lattice gauge theory command line interface

This module contains the metadata for the scan plugin. The metadata includes information about the output columns.
"""

from lgtcli.io import Attribute, Metadata

command_metadata = {
	"scan": Metadata(
		attributes=[
			Attribute(id="index", description="Scan point index, results are in beta_<index>", identifier=True, data_type="int"),
			Attribute(id="beta", description="Inverse coupling", data_type="float"),
			Attribute(id="seed", description="Seed of the scan point", data_type="int", selected=False),
			Attribute(id="plaquette", description="Plaquette average", data_type="float"),
			Attribute(id="plaquette_error", description="Error of the plaquette average", data_type="float"),
			Attribute(id="c", description="Perimeter coefficient", data_type="float"),
			Attribute(id="c_error", description="Error of the perimeter coefficient", data_type="float", selected=False),
			Attribute(id="d", description="Area coefficient", data_type="float"),
			Attribute(id="d_error", description="Error of the area coefficient", data_type="float", selected=False),
			Attribute(id="xi", description="Correlation length", data_type="float"),
			Attribute(id="xi_error", description="Error of the correlation length", data_type="float", selected=False),
			Attribute(id="status", description="ok or failed", data_type="str"),
			Attribute(id="diagnostic", description="Reason of a failed point", data_type="str", selected=False),
		]
	),
}
