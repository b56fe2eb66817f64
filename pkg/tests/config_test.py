"""Tests for the settings management system."""

import os
from pathlib import Path
from unittest.mock import patch

import pytest
import torch
from pydantic import ValidationError

from meshrollout.autodiff import resolve_dtype
from meshrollout.config import get_settings


class TestSettings:
    """Test cases for the Settings class."""

    def test_defaults(self) -> None:
        """Training precision and a single worker by default."""
        with patch.dict(os.environ, {}, clear=True):
            settings = get_settings()
        assert settings.precision == "f32"
        assert settings.threads == 1
        assert settings.output_dir == Path("runs")
        assert settings.enable_tracing is False

    def test_invalid_precision(self) -> None:
        """Only f32 and f64 are accepted."""
        with patch.dict(os.environ, {"MESHROLLOUT_PRECISION": "f16"}):
            with pytest.raises(ValidationError):
                get_settings()

    def test_invalid_threads(self) -> None:
        """Thread counts must be positive integers."""
        for value in ("0", "not-a-number"):
            with patch.dict(os.environ, {"MESHROLLOUT_THREADS": value}):
                with pytest.raises(ValidationError):
                    get_settings()

    def test_boolean_parsing(self) -> None:
        """Boolean values are parsed from strings."""
        with patch.dict(
            os.environ,
            {"MESHROLLOUT_DEBUG": "false", "MESHROLLOUT_ENABLE_TRACING": "true"},
        ):
            settings = get_settings()
            assert settings.debug is False
            assert settings.enable_tracing is True

    def test_precision_drives_dtype(self) -> None:
        """The precision setting selects the default torch dtype."""
        with patch.dict(os.environ, {"MESHROLLOUT_PRECISION": "f64"}):
            assert resolve_dtype() == torch.float64
        assert resolve_dtype("f32") == torch.float32

    def test_get_settings_equality(self) -> None:
        """get_settings returns an equivalent, fresh instance."""
        settings1 = get_settings()
        settings2 = get_settings()
        assert settings1 == settings2
        assert settings1 is not settings2

    def test_case_insensitive_environment_variables(self) -> None:
        """Environment variables are case insensitive."""
        with patch.dict(os.environ, {"meshrollout_app_name": "LowercaseApp"}):
            settings = get_settings()
            assert settings.app_name == "LowercaseApp"

    def test_environment_flags(self) -> None:
        """Development and production flags follow the environment name."""
        with patch.dict(os.environ, {"MESHROLLOUT_ENVIRONMENT": "Production"}):
            settings = get_settings()
            assert settings.is_production
            assert not settings.is_development
