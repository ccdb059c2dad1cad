import pytest

import dtnfem
from dtnfem import analytic, harness


@pytest.fixture(scope="session")
def base_config():
    return dtnfem.PhysicalConfig()


@pytest.fixture(scope="session")
def base_series(base_config):
    return analytic.solve_modes(base_config)


@pytest.fixture(scope="session")
def coarse_pair():
    return harness.build_mesh_pair(1.0, 2.0, 16, 0)


@pytest.fixture(scope="session")
def mesh_pairs():
    """Refined copies of the default coarse pair, keyed by level."""
    return {lv: harness.build_mesh_pair(1.0, 2.0, 16, lv) for lv in range(4)}


@pytest.fixture(scope="session")
def convergence_result():
    """The acceptance convergence study (k=1, N=20, levels 1..3), run once."""
    return harness.convergence_study(dtnfem.StudyConfig())


@pytest.fixture(scope="session")
def truncation_result():
    """The acceptance truncation study (k=1, N=1..20, three meshes)."""
    return harness.truncation_study(
        dtnfem.StudyConfig(n_values=tuple(range(1, 21))))
