"""Shared fixtures: small solved rod cases reused across test modules."""

import math

import pytest

from eddylump import (
    DriveSpec,
    Material,
    MaterialTable,
    SolverOptions,
    assemble,
    balanced_drive,
    build_dofmap,
    extract_edges,
    generate_rod_mesh,
    partition,
    polar_to_rect,
    retag_boundary_band,
    rod_region_map,
    solve,
)

MU0 = 4.0e-7 * math.pi
COPPERISH = MaterialTable({1: Material(sigma=1e6, mu=MU0)})


def solve_rod(mesh, region_map, drive, gauge_seed=0, options=None):
    part = partition(mesh, region_map)
    edges = extract_edges(mesh)
    dofmap = build_dofmap(part, edges, gauge_seed)
    system = assemble(part, edges, dofmap, COPPERISH, drive)
    return solve(system, options or SolverOptions())


@pytest.fixture(scope="session")
def small_rod_mesh():
    return generate_rod_mesh(1.0, 0.01, 2, 8, 10)


@pytest.fixture(scope="session")
def small_rod_dc(small_rod_mesh):
    """Near-DC two-terminal solve, 100 A peak into the top cap."""
    drive = DriveSpec(frequency_hz=0.01,
                      terminal_currents=(polar_to_rect(100.0, 0.0),))
    return solve_rod(small_rod_mesh, rod_region_map(2), drive)


@pytest.fixture(scope="session")
def three_terminal_mesh(small_rod_mesh):
    """Rod with a lateral band carved out as a second driven terminal."""
    return retag_boundary_band(small_rod_mesh, 0.45, 0.65, 10, 13)


@pytest.fixture(scope="session")
def three_terminal_solution(three_terminal_mesh):
    i1, i2, _ = balanced_drive(100.0, 0.0)
    drive = DriveSpec(frequency_hz=50.0, terminal_currents=(i1, i2))
    return solve_rod(three_terminal_mesh, rod_region_map(3), drive)
