"""
lgt-cli - lattice gauge theory command line interface

This module contains the metadata for the run plugin. The metadata includes information about the output columns.
"""

from lgtcli.io import Attribute, Metadata

command_metadata = {
	"run": Metadata(
		attributes=[
			Attribute(id="observable", description="Series key of the observable", identifier=True, data_type="str"),
			Attribute(id="mean", description="Jackknife mean after the thermalization cut", data_type="float"),
			Attribute(id="error", description="Jackknife error of the mean", data_type="float"),
			Attribute(id="tau_int", description="Integrated autocorrelation time", data_type="float"),
			Attribute(id="cut", description="Thermalization cut of the series", data_type="int", selected=False),
			Attribute(id="bin_size", description="Bin size used for the jackknife", data_type="int"),
			Attribute(id="count", description="Number of measurements", data_type="int", selected=False),
		]
	),
}
