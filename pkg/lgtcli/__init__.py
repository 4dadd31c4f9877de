# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface
"""

import sys

from lgtcli.config import config

__version__ = "1.0.0"


def prepare_cli_paths() -> None:
	if config.plugin_user_dir and not config.plugin_user_dir.exists():
		config.plugin_user_dir.mkdir(parents=True)

	# Bundled plugins import their metadata as plugins.<name>.data.metadata
	bundle_root = str(config.plugin_bundle_dir.parent)
	if bundle_root not in sys.path:
		sys.path.append(bundle_root)
	if str(config.plugin_user_dir) not in sys.path:
		sys.path.append(str(config.plugin_user_dir))
