"""
lgt-cli - lattice gauge theory command line interface

This module contains the metadata for the report plugin.
"""

from lgtcli.io import Attribute, Metadata

command_metadata = {
	"report": Metadata(
		attributes=[
			Attribute(id="file", description="Written column file", identifier=True, data_type="str"),
		]
	),
}
