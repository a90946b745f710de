"""Skin effect in a cylindrical rod, solver vs. series solution.

At angular frequency omega the current in a rod of radius a crowds into a
layer of thickness delta = sqrt(2 / (omega * mu * sigma)).  The AC-to-DC
resistance ratio of the rod has a classical Bessel series solution, which
this package ships as an oracle.  The script sweeps a/delta and compares
the edge-element result on a moderate mesh against that series, printing
the discretization error alongside the physical effect so the two are not
confused: the FEM ratio converges to the series value from above as the
mesh is refined.
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
from eddylump.oracles import RodSpec, ac_resistance_ratio, skin_depth

MU0 = 4.0e-7 * math.pi

LENGTH = 0.05
RADIUS = 0.01
SIGMA = 1.0e6
MESH = (10, 14, 6)  # moderate: a few percent discretization error


def rod_resistance(frequency_hz):
    mesh = generate_rod_mesh(LENGTH, RADIUS, *MESH)
    part = partition(mesh, rod_region_map(2))
    edges = extract_edges(mesh)
    dofmap = build_dofmap(part, edges)
    materials = MaterialTable({1: Material(sigma=SIGMA, mu=MU0)})
    drive = DriveSpec(frequency_hz=frequency_hz,
                      terminal_currents=(polar_to_rect(100.0, 0.0),))
    system = assemble(part, edges, dofmap, materials, drive)
    report = terminal_report(solve(system, SolverOptions()))
    v = report.voltages[0].to_complex()
    i = report.currents[0].to_complex()
    return (v / i).real


def main():
    r_dc = rod_resistance(0.01)
    print(f"near-DC resistance: {r_dc * 1e3:.4f} mOhm "
          f"(formula {LENGTH / (SIGMA * math.pi * RADIUS**2) * 1e3:.4f})")
    print()
    print(f"{'a/delta':>8} {'f [Hz]':>10} {'series':>8} {'FEM':>8} "
          f"{'discr err':>10}")
    for ratio in (0.5, 1.0, 2.0):
        delta = RADIUS / ratio
        omega = 2.0 / (delta**2 * MU0 * SIGMA)
        freq = omega / (2.0 * math.pi)
        rod = RodSpec(length=LENGTH, radius=RADIUS, sigma=SIGMA, mu=MU0,
                      omega=omega)
        oracle = ac_resistance_ratio(rod)
        fem = rod_resistance(freq) / r_dc
        print(f"{ratio:>8.1f} {freq:>10.1f} {oracle:>8.4f} {fem:>8.4f} "
              f"{abs(fem - oracle) / oracle:>10.2e}")
    print()
    print(f"skin depth of copper at 50 Hz: "
          f"{skin_depth(5.8e7, MU0, 2 * math.pi * 50.0) * 1e3:.2f} mm")


if __name__ == "__main__":
    main()
