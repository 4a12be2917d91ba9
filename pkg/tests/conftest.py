"""Pytest configuration and shared fixtures"""

import os

import numpy as np
import pytest

from src.core.logging import reset_performance_metrics
from src.core.rng import get_rng
from src.core.settings import reload_settings
from src.families import GaussianFamily, PoissonFamily
from src.models.batch_models import DataBatch
from src.models.simulation_models import SpikedPoissonConfig
from src.services.simulation import gen_spiked_poisson


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Fresh settings with no EPCA_ overrides leaking in from the shell"""
    for key in list(os.environ):
        if key.upper().startswith("EPCA_"):
            monkeypatch.delenv(key, raising=False)
    reload_settings()
    reset_performance_metrics()
    yield
    monkeypatch.undo()
    reload_settings()


@pytest.fixture
def settings_env(monkeypatch):
    """Set EPCA_ environment variables and reload settings"""
    def apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(f"EPCA_{key.upper()}", str(value))
        return reload_settings()
    return apply


@pytest.fixture
def rng():
    """Seeded generator for test data"""
    return get_rng(1234)


@pytest.fixture
def spiked_config():
    """Spiked Poisson configuration well above its phase transition"""
    return SpikedPoissonConfig(n=400, p=100, ell=4.0, seed=7)


@pytest.fixture
def spiked_draw(spiked_config):
    """(batch, truth) drawn from the spiked Poisson model"""
    return gen_spiked_poisson(spiked_config)


@pytest.fixture
def spiked_batch(spiked_draw):
    """Poisson batch from the spiked model"""
    return spiked_draw[0]


@pytest.fixture
def gaussian_spiked_batch(rng):
    """Homoskedastic unit-variance Gaussian data with one strong spike"""
    n, p = 600, 60
    v = np.zeros(p)
    v[:6] = 1.0 / np.sqrt(6.0)
    z = rng.standard_normal(n) * np.sqrt(9.0)
    values = np.outer(z, v) + rng.standard_normal((n, p)) + 5.0
    return DataBatch.from_array(values, GaussianFamily(1.0))


@pytest.fixture
def batch_with_zero_column(spiked_batch):
    """Spiked batch with an all-zero Poisson column inserted at index 3"""
    values = np.insert(np.asarray(spiked_batch.values), 3, 0.0, axis=1)
    return DataBatch.from_array(values, PoissonFamily())


@pytest.fixture
def genotype_csv(tmp_path):
    """Genotype CSV with SNP ids, NA tokens and one invariant SNP"""
    path = tmp_path / "snps.csv"
    path.write_text(
        "# genotypes\n"
        "rs1,rs2,rs3,rs4\n"
        "0,2,1,2\n"
        "2,NA,0,2\n"
        "NA,1,2,2\n"
        "1,0,,2\n"
        "0,1,-1,2\n"
    )
    return path
