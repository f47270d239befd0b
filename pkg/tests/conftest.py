"""Shared fixtures: reference datasets and cached inference runs.

The observed datasets mirror the simulation study: one long voltage path
generated with the splitting scheme at step 1e-4 over horizon 200 under
theta = (0.1, 1.5, 0.8, 0.3), then subsampled/cut per scenario.  Generating
the fine path takes ~30 s, so it is session-scoped, as are the inference
runs shared by several acceptance criteria.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from fhnabc.dataio import ObservedSeries
from fhnabc.engine import EngineConfig, run_smc_abc
from fhnabc.model import ModelParams, State, strang_path
from fhnabc.priors import PriorSpec

THETA_TRUE = ModelParams(0.1, 1.5, 0.8, 0.3)
DATA_SEED = 20260810

NIGHTLY = os.environ.get("FHNABC_NIGHTLY") == "1"
nightly = pytest.mark.nightly


def pytest_collection_modifyitems(config, items):
    if not NIGHTLY:
        skip = pytest.mark.skip(reason="nightly run only (set FHNABC_NIGHTLY=1)")
        for item in items:
            if "nightly" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def fine_path_v() -> np.ndarray:
    """Voltage path at step 1e-4 over T=200 under the true parameters."""
    rng = np.random.default_rng(DATA_SEED)
    traj = strang_path(THETA_TRUE, State(0.0, 0.0), 1e-4, 2_000_000, rng)
    return traj.v_values


@pytest.fixture(scope="session")
def desk_observed(fine_path_v) -> ObservedSeries:
    """T_obs=50 at obs step 0.08 (626 points)."""
    return ObservedSeries(fine_path_v[::800][:626], 0.08)


@pytest.fixture(scope="session")
def full_observed(fine_path_v) -> ObservedSeries:
    """T_obs=200 at obs step 0.02 (10001 points)."""
    return ObservedSeries(fine_path_v[::200], 0.02)


def desk_config(**overrides) -> EngineConfig:
    base = dict(
        budget=200_000, sim_horizon=50.0, obs_step=0.08,
        prior=PriorSpec.uniform_simulation(), n_particles=1000,
        percentile=50.0, sim_step=0.02, seed=1, pilot_size=10_000,
    )
    base.update(overrides)
    return EngineConfig(**base)


@pytest.fixture(scope="session")
def desk_run(desk_observed):
    """Criterion-3 desk-scale recovery run (budget 2e5), shared downstream."""
    cfg = desk_config()
    pop, trace = run_smc_abc(cfg, desk_observed)
    return cfg, pop, trace
