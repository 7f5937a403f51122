"""Shared fixtures: mesh hierarchies and a session-wide study cache."""

import numpy as np
import pytest

from pdwg.analysis import run_study
from pdwg.mesh import DomainSpec, build_initial_mesh, refine_uniform
from pdwg.problems import builtin
from pdwg.wgspace import SpaceConfig


def mesh_hierarchy(kind, levels):
    mesh = build_initial_mesh(DomainSpec(kind))
    out = [mesh]
    for _ in range(levels):
        mesh = refine_uniform(mesh)
        out.append(mesh)
    return out


@pytest.fixture(scope="session")
def unit_meshes():
    """Unit-square meshes, levels 0..4."""
    return mesh_hierarchy("unit_square", 4)


@pytest.fixture(scope="session")
def ref_meshes():
    """(-1,1)^2 meshes, levels 0..3."""
    return mesh_hierarchy("ref_square", 3)


@pytest.fixture(scope="session")
def lshape_meshes():
    """L-shape meshes, levels 0..3."""
    return mesh_hierarchy("l_shape", 3)


@pytest.fixture(scope="session")
def study_cache():
    """Memoized convergence studies shared across the whole session."""
    cache = {}

    def get(problem, multiplier="pkm1", c0=True, levels=6):
        key = (problem, multiplier, c0, levels)
        if key not in cache:
            config = SpaceConfig(k=2, multiplier_space=multiplier, c0_type=c0)
            cache[key] = run_study(builtin(problem), config, levels=levels)
        return cache[key]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
