"""Sanity check the solver on the one geometry with a closed-form answer.

A copper-ish rod of length L and radius a driven with 100 A through its
end caps must reproduce R = L / (sigma * pi * a**2) once the frequency is
low enough that eddy currents are negligible.  This script solves the
same rod at three radial resolutions and prints the convergence of the
extracted impedance toward the formula, plus the discrete energy balance
which should hold to solver precision at every resolution.
"""

import math

from eddylump import (
    DriveSpec,
    Material,
    MaterialTable,
    SolverOptions,
    assemble,
    build_dofmap,
    extract_edges,
    generate_rod_mesh,
    partition,
    polar_to_rect,
    rod_region_map,
    solve,
    terminal_report,
)

MU0 = 4.0e-7 * math.pi

LENGTH = 1.0      # m
RADIUS = 0.01     # m
SIGMA = 1.0e6     # S/m
CURRENT = 100.0   # A peak
FREQ = 0.01       # Hz, low enough that the rod behaves resistively


def solve_rod(n_r, n_theta, n_z):
    mesh = generate_rod_mesh(LENGTH, RADIUS, n_r, n_theta, n_z)
    part = partition(mesh, rod_region_map(2))
    edges = extract_edges(mesh)
    dofmap = build_dofmap(part, edges)
    materials = MaterialTable({1: Material(sigma=SIGMA, mu=MU0)})
    drive = DriveSpec(frequency_hz=FREQ,
                      terminal_currents=(polar_to_rect(CURRENT, 0.0),))
    system = assemble(part, edges, dofmap, materials, drive)
    return mesh, terminal_report(solve(system, SolverOptions()))


def main():
    r_formula = LENGTH / (SIGMA * math.pi * RADIUS**2)
    print(f"analytic resistance: {r_formula * 1e3:.6f} mOhm")
    print()
    print(f"{'mesh':>14} {'tets':>6} {'R [mOhm]':>12} {'rel err':>10} "
          f"{'|Re(S)-P_h|/P_h':>16}")
    for n_r, n_theta, n_z in ((1, 6, 10), (2, 8, 20), (4, 16, 60)):
        mesh, report = solve_rod(n_r, n_theta, n_z)
        v = report.voltages[0].to_complex()
        i = report.currents[0].to_complex()
        r_fem = (v / i).real
        balance = abs(report.S.real - report.P_h) / report.P_h
        print(f"{f'({n_r},{n_theta},{n_z})':>14} {mesh.n_tets:>6} "
              f"{r_fem * 1e3:>12.6f} {abs(r_fem - r_formula) / r_formula:>10.2e} "
              f"{balance:>16.2e}")
    print()
    print("note: the mesh cross-section is built with an equal-area ring "
          "correction, so even the coarse rod carries the exact DC "
          "resistance; the remaining error is the solver tolerance.")


if __name__ == "__main__":
    main()
