"""
test_decorators
"""

from unittest.mock import Mock, patch

import rich_click as click

from lgtcli.decorators import handle_list_attributes
from lgtcli.io import Attribute, Metadata


def make_context(command_path: str) -> Mock:
	ctx = Mock()
	ctx.command = Mock(spec=click.Command)
	ctx.command_path = command_path
	return ctx


def test_handle_list_attributes() -> None:
	mock_config = Mock()
	mock_config.list_attributes = True

	mock_module = Mock()
	mock_module.command_metadata = {
		"run": Metadata(
			attributes=[
				Attribute(id="observable", identifier=True, data_type="str"),
				Attribute(id="mean", data_type="float"),
			]
		)
	}

	ctx = make_context("lgt-cli run")
	with (
		patch("lgtcli.decorators.config", mock_config),
		patch("lgtcli.decorators.importlib.import_module", return_value=mock_module) as import_module,
		patch("lgtcli.decorators.list_attributes") as list_attributes,
	):

		@handle_list_attributes
		def test_func(ctx: click.Context) -> str:
			return "Test function executed"

		test_func(ctx)
		import_module.assert_called_once_with("plugins.run.data.metadata")
		list_attributes.assert_called_once_with(mock_module.command_metadata["run"])
		ctx.exit.assert_called_once()


def test_handle_list_attributes_disabled() -> None:
	mock_config = Mock()
	mock_config.list_attributes = False

	ctx = make_context("lgt-cli oracle")
	with patch("lgtcli.decorators.config", mock_config), patch("lgtcli.decorators.importlib.import_module") as import_module:

		@handle_list_attributes
		def test_func(ctx: click.Context, beta: float) -> float:
			return beta * 2

		assert test_func(ctx, beta=0.25) == 0.5
		import_module.assert_not_called()
		ctx.exit.assert_not_called()
