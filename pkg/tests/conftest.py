from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from intentbench.backends import BackendDescriptor, BackendKind, MockPolicy, load_backends
from intentbench.catalog import builtin_backends_path, builtin_catalog_dir, load_catalog
from intentbench.prompts import load_exemplars


@pytest.fixture(scope="session")
def catalog_dir() -> Path:
    return builtin_catalog_dir()


@pytest.fixture(scope="session")
def loaded(catalog_dir):
    return load_catalog(catalog_dir)


@pytest.fixture(scope="session")
def catalog(loaded):
    return loaded[0]


@pytest.fixture(scope="session")
def references(loaded):
    return loaded[1]


@pytest.fixture(scope="session")
def exemplars(catalog_dir):
    return load_exemplars(catalog_dir / "exemplars")


@pytest.fixture(scope="session")
def backend_registry():
    return load_backends(builtin_backends_path())


@pytest.fixture()
def catalog_copy(catalog_dir, tmp_path) -> Path:
    """Writable copy of the golden catalog for corruption tests."""
    dest = tmp_path / "catalog"
    shutil.copytree(catalog_dir, dest)
    return dest


def make_mock_backend(name: str = "mock-a", *, open_source: bool = True, prices=(0.0, 0.0), **policy) -> BackendDescriptor:
    return BackendDescriptor(
        name=name,
        kind=BackendKind.MOCK,
        model_id=f"{name}-model",
        price_in_usd_per_1m=prices[0],
        price_out_usd_per_1m=prices[1],
        open_source=open_source,
        mock_policy=MockPolicy(**policy),
    )


def rewrite_json(path: Path, mutate) -> None:
    doc = json.loads(path.read_text())
    mutate(doc)
    path.write_text(json.dumps(doc, indent=2))
