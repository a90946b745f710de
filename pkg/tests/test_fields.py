import io
import json
import math

import numpy as np
import pytest

from eddylump import (
    DriveSpec,
    Material,
    MaterialTable,
    Mesh,
    RegionMap,
    SolverOptions,
    assemble,
    build_dofmap,
    concatenate,
    element_fields,
    export_vtk,
    extract_edges,
    generate_rod_mesh,
    joule_power,
    partition,
    polar_to_rect,
    report_from_json,
    report_to_json,
    rod_region_map,
    solve,
    terminal_currents,
    terminal_report,
    translate,
)
from conftest import COPPERISH, MU0, solve_rod

R_DC = 1.0 / (1e6 * math.pi * 1e-4)
J_UNIFORM = 100.0 / (math.pi * 1e-4)  # 318309.886 A/m^2


def centroid_radii(mesh):
    c = mesh.vertices[mesh.tets].mean(axis=1)
    return np.hypot(c[:, 0], c[:, 1])


class TestDcFields:
    def test_current_density_uniform_axial(self, small_rod_dc):
        # f = 0.01 Hz: a genuine O(omega) eddy correction of order 1e-5
        # relative rides on the uniform axial density, so the bounds are
        # 1e-4, not solver precision
        ef = element_fields(small_rod_dc)
        jz = ef.J[:, 2]
        assert np.abs(ef.J[:, :2]).max() <= 1e-4 * J_UNIFORM
        assert np.abs(jz).mean() == pytest.approx(J_UNIFORM, rel=1e-9)
        assert np.abs(jz - jz.mean()).max() <= 1e-4 * J_UNIFORM

    def test_joule_density_and_power(self, small_rod_dc):
        ef = element_fields(small_rod_dc)
        dens_ref = 0.5 * J_UNIFORM**2 / 1e6
        assert ef.joule_density.mean() == pytest.approx(dens_ref, rel=1e-9)
        assert joule_power(small_rod_dc) == pytest.approx(0.5 * 100**2 * R_DC,
                                                          rel=1e-9)

    def test_azimuthal_b_field(self, small_rod_dc):
        # B should circulate: mu I r / (2 pi a^2) inside the rod.  The curl
        # of the lowest-order element field is piecewise constant, so only
        # expect coarse agreement, checked on the outer ring of elements.
        mesh = small_rod_dc.partition.mesh
        r = centroid_radii(mesh)
        ef = element_fields(small_rod_dc)
        outer = r > 0.7 * 0.01
        b_ref = MU0 * 100.0 * r[outer] / (2 * math.pi * 1e-4)
        b_mag = np.linalg.norm(ef.B[outer].real, axis=1)
        assert np.all(np.abs(b_mag - b_ref) <= 0.25 * b_ref)

    def test_power_scales_quadratically(self, small_rod_mesh):
        d1 = DriveSpec(frequency_hz=0.01,
                       terminal_currents=(polar_to_rect(100.0, 0.0),))
        d2 = DriveSpec(frequency_hz=0.01,
                       terminal_currents=(polar_to_rect(200.0, 0.0),))
        p1 = joule_power(solve_rod(small_rod_mesh, rod_region_map(2), d1))
        p2 = joule_power(solve_rod(small_rod_mesh, rod_region_map(2), d2))
        assert p2 == pytest.approx(4.0 * p1, rel=1e-12)


class TestDiscreteIdentities:
    def test_energy_balance_two_terminal(self, small_rod_dc):
        rep = terminal_report(small_rod_dc)
        assert abs(rep.S.real - rep.P_h) <= 1e-6 * rep.P_h

    def test_energy_balance_three_terminal(self, three_terminal_solution):
        rep = terminal_report(three_terminal_solution)
        assert abs(rep.S.real - rep.P_h) <= 1e-6 * rep.P_h
        assert rep.S.imag >= 0.0

    def test_current_conservation(self, three_terminal_solution):
        rep = terminal_report(three_terminal_solution)
        total = sum(c.to_complex() for c in rep.currents)
        biggest = max(c.magnitude for c in rep.currents)
        assert abs(total) <= 1e-8 * biggest

    def test_recomputed_currents_match_prescribed(self, three_terminal_solution):
        rep = terminal_report(three_terminal_solution)
        drive = three_terminal_solution.drive
        for got, want in zip(rep.currents, drive.terminal_currents):
            assert abs(got.to_complex() - want.to_complex()) <= 1e-8 * want.magnitude

    def test_terminal_currents_function_directly(self, small_rod_dc):
        i = terminal_currents(small_rod_dc)
        assert i.shape == (2,)
        assert i[0] == pytest.approx(100.0, rel=1e-10)
        assert i[1] == pytest.approx(-100.0, rel=1e-10)


class TestAcProfile:
    def profile_errors(self, n_r, n_theta, n_z):
        """Per-element |J| against the absolute series profile
        J(r) = kappa I J0(kappa r) / (2 pi a J1(kappa a))."""
        from eddylump.oracles import RodSpec, rod_current_profile, \
            _j1_series, _kappa

        sigma, radius, length = 1e6, 0.01, 0.05
        delta = radius / 2.0
        omega = 2.0 / (delta**2 * MU0 * sigma)
        rod = RodSpec(length=length, radius=radius, sigma=sigma, mu=MU0,
                      omega=omega)
        mesh = generate_rod_mesh(length, radius, n_r, n_theta, n_z)
        drive = DriveSpec(frequency_hz=omega / (2 * math.pi),
                          terminal_currents=(polar_to_rect(100.0, 0.0),))
        sol = solve_rod(mesh, rod_region_map(2), drive)
        jmag = np.abs(element_fields(sol).J[:, 2])
        r = np.clip(centroid_radii(mesh), 0.0, radius)
        norm = _kappa(rod) * 100.0 / (2 * math.pi * radius
                                      * _j1_series(_kappa(rod) * radius))
        j_ref = abs(norm) * np.abs(rod_current_profile(rod, r))
        return np.abs(jmag - j_ref) / j_ref

    def test_skin_profile_matches_series_oracle(self):
        rel = self.profile_errors(10, 14, 6)
        assert np.median(rel) <= 0.10
        assert np.quantile(rel, 0.9) <= 0.20

    def test_skin_profile_error_shrinks_with_mesh(self):
        coarse = np.median(self.profile_errors(6, 10, 4))
        fine = np.median(self.profile_errors(10, 14, 6))
        assert fine < coarse


class TestReportSerialization:
    def test_json_round_trip(self, three_terminal_solution):
        # frequency, S and P_h serialize as shortest-round-trip floats and
        # come back bit-exact; terminal phasors go through the polar form,
        # so magnitude and phase are exact while re/im can move by an ulp
        rep = terminal_report(three_terminal_solution)
        text = report_to_json(rep)
        rep2 = report_from_json(text)
        assert rep2.frequency_hz == rep.frequency_hz
        assert rep2.S == rep.S
        assert rep2.P_h == rep.P_h
        for a, b in zip(rep.voltages + rep.currents,
                        rep2.voltages + rep2.currents):
            assert b.magnitude == pytest.approx(a.magnitude, rel=1e-15, abs=0.0)
            assert abs(b.to_complex() - a.to_complex()) <= 1e-14 * max(
                a.magnitude, 1e-30)

    def test_json_schema_keys(self, small_rod_dc):
        doc = json.loads(report_to_json(terminal_report(small_rod_dc)))
        assert set(doc) == {"frequency_hz", "terminals", "S", "P_h"}
        assert set(doc["S"]) == {"re", "im"}
        for term in doc["terminals"]:
            assert set(term) == {"V", "I"}
            assert set(term["V"]) == {"mag", "phase"}
            assert set(term["I"]) == {"mag", "phase"}

    def test_malformed_report_rejected(self):
        with pytest.raises(ValueError):
            report_from_json("{}")
        with pytest.raises(ValueError):
            report_from_json("not json at all")


class TestVtkExport:
    def test_structure_and_determinism(self, small_rod_dc):
        buf1, buf2 = io.StringIO(), io.StringIO()
        export_vtk(small_rod_dc, buf1)
        export_vtk(small_rod_dc, buf2)
        text = buf1.getvalue()
        assert text == buf2.getvalue()
        lines = text.splitlines()
        assert lines[0] == "# vtk DataFile Version 3.0"
        assert lines[2] == "ASCII"
        assert lines[3] == "DATASET UNSTRUCTURED_GRID"
        mesh = small_rod_dc.partition.mesh
        assert f"POINTS {mesh.n_vertices} double" in lines
        assert f"CELLS {mesh.n_tets} {5 * mesh.n_tets}" in lines
        assert f"CELL_DATA {mesh.n_tets}" in lines
        for name in ("Re_J", "Im_J", "Re_B", "Im_B"):
            assert f"VECTORS {name} double" in lines
        for name in ("abs_J", "joule_density"):
            assert f"SCALARS {name} double 1" in lines

    def test_dielectric_cells_dark_in_export(self):
        a = generate_rod_mesh(0.4, 0.02, 1, 5, 3)
        b = translate(a, (1.0, 0.0, 0.0))
        b = Mesh(b.vertices, b.tets, np.full(b.n_tets, 2), b.boundary_tris,
                 np.full(len(b.tri_tags), 10))
        m = concatenate(a, b)
        rm = RegionMap(conductor_tags=frozenset({1}),
                       dielectric_tags=frozenset({2}), heater_tags=frozenset(),
                       outer_tag=10, terminal_tags=(11, 12))
        part = partition(m, rm)
        edges = extract_edges(m)
        dm = build_dofmap(part, edges, 0)
        mats = MaterialTable({1: Material(sigma=1e6, mu=MU0),
                              2: Material(sigma=0.0, mu=MU0)})
        drive = DriveSpec(frequency_hz=50.0,
                          terminal_currents=(polar_to_rect(10.0, 0.0),))
        sol = solve(assemble(part, edges, dm, mats, drive), SolverOptions())
        ef = element_fields(sol)
        assert np.all(ef.J[part.dielectric_tets] == 0)
        assert np.all(ef.joule_density[part.dielectric_tets] == 0)
        buf = io.StringIO()
        export_vtk(sol, buf)
        assert "joule_density" in buf.getvalue()
