import json
import os
import pathlib
import shutil
import subprocess

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
SCHEMAS = ROOT / "schemas"


def _cli_path():
    env = os.environ.get("MFRNN_CLI")
    if env:
        return env
    for cand in (ROOT / "build" / "mfrnn", shutil.which("mfrnn")):
        if cand and pathlib.Path(cand).is_file():
            return str(cand)
    return None


@pytest.fixture(scope="session")
def cli():
    path = _cli_path()
    if path is None:
        pytest.skip("mfrnn CLI not built (set MFRNN_CLI)")

    def run(*args, check=None):
        proc = subprocess.run([path, *map(str, args)], capture_output=True, text=True, timeout=300)
        if check is not None:
            assert proc.returncode == check, proc.stderr
        return proc

    return run


@pytest.fixture(scope="session")
def schema():
    jsonschema = pytest.importorskip("jsonschema")

    def validate(doc, name):
        with open(SCHEMAS / f"{name}.schema.json", encoding="utf-8") as fh:
            jsonschema.validate(doc, json.load(fh))

    return validate
