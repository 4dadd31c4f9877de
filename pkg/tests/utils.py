"""
lgt-cli - lattice gauge theory command line interface

Test utilities
"""

import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Generator, Iterator, Sequence

from click.testing import CliRunner  # type: ignore[import]

from lgtcli.__main__ import main
from lgtcli.config import config

runner = CliRunner(mix_stderr=False)


def run_cli(args: Sequence[str], stdin: list[str] | None = None) -> tuple[int, str, str]:
	result = runner.invoke(main, args, obj={}, catch_exceptions=False, input="\n".join(stdin or []))
	return (result.exit_code, result.stdout, result.stderr)


@contextmanager
def temp_context() -> Generator[Path, None, None]:
	snapshot = config.snapshot()
	try:
		with tempfile.TemporaryDirectory(ignore_cleanup_errors=True) as tempdir:
			tempdir_path = Path(tempdir)
			config.color = False
			config.plugin_user_dir = tempdir_path / "user_plugins"
			config.plugin_system_dir = tempdir_path / "system_plugins"
			config.config_file_user = tempdir_path / "lgt-cli.yaml"
			config.config_file_system = tempdir_path / "lgt-cli-system.yaml"
			yield tempdir_path
	finally:
		config.restore(snapshot)


@contextmanager
def temp_env(**environ: str) -> Iterator[None]:
	old_environ = dict(os.environ)
	os.environ.update(environ)
	try:
		yield
	finally:
		os.environ.clear()
		os.environ.update(old_environ)


def write_experiment(path: Path, sections: dict[str, dict[str, Any]]) -> Path:
	"""Write an INI experiment file."""
	lines = []
	for section, values in sections.items():
		lines.append(f"[{section}]")
		lines.extend(f"{key} = {value}" for key, value in values.items())
		lines.append("")
	path.write_text("\n".join(lines), encoding="utf-8")
	return path


def tiny_z2_experiment(directory: Path, **overrides: dict[str, Any]) -> dict[str, dict[str, Any]]:
	"""Z2 on a periodic 2x2 lattice, small enough for exact enumeration."""
	sections: dict[str, dict[str, Any]] = {
		"model": {"group": "Z2", "extents": "2,2", "beta": 0.5},
		"sampler": {"algorithm": "heatbath", "seed": 7},
		"schedule": {"thermalization": 20, "measurements": 400, "checkpoint_every": 100},
		"observables": {"plaquette": "true"},
		"output": {"directory": str(directory)},
	}
	for section, values in overrides.items():
		sections.setdefault(section, {}).update(values)
	return sections
