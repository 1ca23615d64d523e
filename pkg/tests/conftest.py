"""Shared pytest configuration and fixtures for all tests."""

import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from herzkit.config import HerzkitSettings
from herzkit.services import create_services


@pytest.fixture
def settings():
    """Default settings, ignoring any local .env file."""
    return HerzkitSettings(_env_file=None)


@pytest.fixture
def services(settings):
    """Full service graph wired to the default settings."""
    return create_services(settings)


@pytest.fixture
def quadrature(services):
    return services.quadrature


@pytest.fixture
def norm_service(services):
    return services.norms


@pytest.fixture
def operator_service(services):
    return services.operators


@pytest.fixture
def embedding_service(services):
    return services.embeddings


@pytest.fixture
def counterexample_service(services):
    return services.counterexamples
