import math

import numpy as np
import pytest

from eddylump import (
    AssemblyError,
    DofMapError,
    DriveSpec,
    Material,
    MaterialTable,
    Mesh,
    SolveError,
    SolverOptions,
    assemble,
    build_dofmap,
    concatenate,
    extract_edges,
    generate_rod_mesh,
    partition,
    polar_to_rect,
    rod_region_map,
    solve,
    translate,
)
from conftest import COPPERISH, MU0, solve_rod

R_DC = 1.0 / (1e6 * math.pi * 1e-4)  # 1 m x 1 cm rod at 1e6 S/m
DRIVE_100A = DriveSpec(frequency_hz=0.01,
                       terminal_currents=(polar_to_rect(100.0, 0.0),))


def rod_setup(n_r=1, n_theta=4, n_z=1, gauge_seed=0):
    mesh = generate_rod_mesh(1.0, 0.01, n_r, n_theta, n_z)
    part = partition(mesh, rod_region_map(2))
    edges = extract_edges(mesh)
    return mesh, part, edges, build_dofmap(part, edges, gauge_seed)


class TestDofMap:
    def test_smallest_rod_counts(self):
        # 10 vertices, 29 edges, 24 of them on the boundary; the interior
        # spanning tree is empty, so 5 free edge dofs remain.  No interior
        # vertices, one driven-terminal unknown.
        mesh, part, edges, dm = rod_setup()
        assert len(edges.edges) == 29
        assert int(edges.on_boundary.sum()) == 24
        assert dm.n_edge_dofs == 5
        assert dm.n_interior_nodes == 0
        assert dm.n_dofs == 6
        assert dm.n_terminals == 2

    def test_dof_count_independent_of_seed(self):
        _, part, edges, dm0 = rod_setup(2, 8, 6, gauge_seed=0)
        dm1 = build_dofmap(part, edges, 999)
        assert dm0.n_dofs == dm1.n_dofs
        assert dm0.n_edge_dofs == dm1.n_edge_dofs
        assert len(dm0.tree_edges) == len(dm1.tree_edges)
        assert not np.array_equal(dm0.tree_edges, dm1.tree_edges)

    def test_tree_edges_have_no_dof(self):
        _, _, _, dm = rod_setup(2, 8, 6)
        assert np.all(dm.edge_dof[dm.tree_edges] == -1)

    def test_ground_must_share_component_with_driven_terminals(self):
        # two disjoint rods; terminal 1 lives on rod A, ground on rod B
        a = generate_rod_mesh(0.4, 0.02, 1, 5, 3)
        b = translate(a, (1.0, 0.0, 0.0))
        lateral = np.full(len(a.tri_tags), 10)
        a_only_top = np.where(a.tri_tags == 12, 10, a.tri_tags)
        b_only_bottom = np.where(b.tri_tags == 11, 10, b.tri_tags)
        m = concatenate(
            Mesh(a.vertices, a.tets, a.tet_tags, a.boundary_tris, a_only_top),
            Mesh(b.vertices, b.tets, b.tet_tags, b.boundary_tris, b_only_bottom),
        )
        part = partition(m, rod_region_map(2))
        edges = extract_edges(m)
        with pytest.raises(DofMapError, match="ground"):
            build_dofmap(part, edges, 0)

    def test_floating_component_gets_pinned_node(self):
        a = generate_rod_mesh(0.4, 0.02, 1, 5, 3)
        b = translate(a, (1.0, 0.0, 0.0))
        b = Mesh(b.vertices, b.tets, b.tet_tags, b.boundary_tris,
                 np.full(len(b.tri_tags), 10))
        m = concatenate(a, b)
        part = partition(m, rod_region_map(2))
        dm = build_dofmap(part, extract_edges(m), 0)
        assert len(dm.pinned_nodes) == 1
        # the pin sits in the terminal-free rod
        assert dm.pinned_nodes[0] >= a.n_vertices


class TestAssemble:
    def test_matrix_complex_symmetric(self):
        _, part, edges, dm = rod_setup(2, 8, 4)
        drive = DriveSpec(frequency_hz=60.0,
                          terminal_currents=(polar_to_rect(5.0, 0.3),))
        system = assemble(part, edges, dm, COPPERISH, drive)
        m = system.matrix
        asym = abs(m - m.T).max()
        assert asym <= 1e-15 * abs(m).max()

    def test_rhs_only_on_terminal_dofs(self):
        _, part, edges, dm = rod_setup(2, 8, 4)
        system = assemble(part, edges, dm, COPPERISH, DRIVE_100A)
        nz = np.flatnonzero(system.rhs)
        assert set(nz.tolist()) == set(int(d) for d in dm.terminal_dof)

    def test_zero_conductivity_on_driven_component_rejected(self):
        _, part, edges, dm = rod_setup(1, 4, 2)
        dead = MaterialTable({1: Material(sigma=0.0, mu=MU0)})
        with pytest.raises(AssemblyError, match="conductivity"):
            assemble(part, edges, dm, dead, DRIVE_100A)


class TestSolve:
    def test_zero_amplitude_drive_gives_zero_field(self):
        mesh = generate_rod_mesh(1.0, 0.01, 1, 4, 2)
        drive = DriveSpec(frequency_hz=50.0,
                          terminal_currents=(polar_to_rect(0.0, 0.0),))
        sol = solve_rod(mesh, rod_region_map(2), drive)
        assert sol.method == "trivial"
        assert np.all(sol.edge_coeffs == 0)
        assert np.all(sol.node_potential == 0)
        assert np.all(sol.terminal_potentials == 0)

    def test_dc_rod_voltage_matches_closed_form(self, small_rod_dc):
        v1 = small_rod_dc.terminal_potentials[0]
        assert v1.real == pytest.approx(100.0 * R_DC, rel=1e-9)
        assert small_rod_dc.terminal_potentials[-1] == 0.0
        assert small_rod_dc.residual <= 1e-10

    def test_solution_linear_in_drive(self, small_rod_mesh):
        drive2 = DriveSpec(frequency_hz=0.01,
                           terminal_currents=(polar_to_rect(200.0, 0.0),))
        s1 = solve_rod(small_rod_mesh, rod_region_map(2), DRIVE_100A)
        s2 = solve_rod(small_rod_mesh, rod_region_map(2), drive2)
        assert np.allclose(s2.edge_coeffs, 2.0 * s1.edge_coeffs,
                           rtol=1e-12, atol=1e-18)
        assert np.allclose(s2.node_potential, 2.0 * s1.node_potential,
                           rtol=1e-12, atol=1e-18)

    def test_gauge_invariance_of_observables(self, small_rod_mesh):
        s1 = solve_rod(small_rod_mesh, rod_region_map(2), DRIVE_100A, gauge_seed=0)
        s2 = solve_rod(small_rod_mesh, rod_region_map(2), DRIVE_100A, gauge_seed=4242)
        # the vector potential representative changes ...
        assert not np.allclose(s1.edge_coeffs, s2.edge_coeffs,
                               rtol=1e-10, atol=1e-16)
        # ... terminal voltages do not
        for a, b in zip(s1.terminal_potentials, s2.terminal_potentials):
            assert abs(a - b) <= 1e-8 * max(abs(a), 1e-30)

    def test_iterative_matches_direct(self, small_rod_mesh):
        drive = DriveSpec(frequency_hz=50.0,
                          terminal_currents=(polar_to_rect(100.0, 0.0),))
        s_dir = solve_rod(small_rod_mesh, rod_region_map(2), drive)
        s_it = solve_rod(small_rod_mesh, rod_region_map(2), drive,
                         options=SolverOptions(method="iterative", tol=1e-12,
                                               max_iterations=50000))
        v_dir = s_dir.terminal_potentials[0]
        v_it = s_it.terminal_potentials[0]
        assert s_it.method == "iterative"
        assert abs(v_it - v_dir) <= 1e-8 * abs(v_dir)

    def test_iterative_nonconvergence_raises(self, small_rod_mesh):
        with pytest.raises(SolveError) as err:
            solve_rod(small_rod_mesh, rod_region_map(2), DRIVE_100A,
                      options=SolverOptions(method="iterative", tol=1e-14,
                                            max_iterations=3))
        assert err.value.iterations == 3
        assert err.value.residual is not None

    def test_floating_dielectric_component_is_solvable_and_dark(self):
        # conductor rod with terminals plus a detached dielectric block:
        # the tree gauge must keep the dielectric curl-curl block regular,
        # and no field leaks into it
        a = generate_rod_mesh(0.4, 0.02, 1, 5, 3)
        b = translate(a, (1.0, 0.0, 0.0))
        b = Mesh(b.vertices, b.tets, np.full(b.n_tets, 2), b.boundary_tris,
                 np.full(len(b.tri_tags), 10))
        m = concatenate(a, b)
        from eddylump import RegionMap
        rm = RegionMap(conductor_tags=frozenset({1}),
                       dielectric_tags=frozenset({2}),
                       heater_tags=frozenset(), outer_tag=10,
                       terminal_tags=(11, 12))
        part = partition(m, rm)
        edges = extract_edges(m)
        dm = build_dofmap(part, edges, 0)
        mats = MaterialTable({1: Material(sigma=1e6, mu=MU0),
                              2: Material(sigma=0.0, mu=MU0)})
        drive = DriveSpec(frequency_hz=50.0,
                          terminal_currents=(polar_to_rect(10.0, 0.0),))
        sol = solve(assemble(part, edges, dm, mats, drive), SolverOptions())
        # edges fully inside the dielectric rod carry nothing
        in_b = np.all(edges.edges >= a.n_vertices, axis=1)
        assert np.abs(sol.edge_coeffs[in_b]).max() <= 1e-12 * max(
            np.abs(sol.edge_coeffs).max(), 1e-30)
        assert sol.residual <= 1e-10

    def test_results_read_only(self, small_rod_dc):
        with pytest.raises(ValueError):
            small_rod_dc.edge_coeffs[0] = 1.0
