"""Collapse a three-terminal field solution to one lumped impedance.

A rod with an extra electrode band around its waist makes the smallest
three-terminal fixture: terminal 1 on the top cap, terminal 2 on the
band, ground on the bottom cap.  Driving terminals 1 and 2 with a
balanced pair (the third current follows from conservation) yields three
voltage phasors; the reduction maps them to a single line-to-line
quantity V_R and one impedance Z_R = V_R / I_1 whose real part carries
the full Joule power of the device: P = 1/2 * Re(Z_R) * |I_1|**2 for a
balanced drive (peak-amplitude phasors, hence the 1/2).
"""

import math

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
    predict_power,
    reduce,
    retag_boundary_band,
    rod_region_map,
    solve,
    terminal_report,
)

MU0 = 4.0e-7 * math.pi
AMPLITUDE = 100.0  # A peak per phase
FREQ = 50.0


def main():
    mesh = generate_rod_mesh(1.0, 0.01, 2, 8, 10)
    mesh = retag_boundary_band(mesh, 0.45, 0.65, 10, 13)
    region_map = rod_region_map(3)
    part = partition(mesh, region_map)
    edges = extract_edges(mesh)
    dofmap = build_dofmap(part, edges)
    materials = MaterialTable({1: Material(sigma=1e6, mu=MU0)})

    i1, i2, i3 = balanced_drive(AMPLITUDE, 0.0)
    drive = DriveSpec(frequency_hz=FREQ, terminal_currents=(i1, i2))
    system = assemble(part, edges, dofmap, materials, drive)
    report = terminal_report(solve(system, SolverOptions()))

    print(f"{'terminal':>8} {'|V| [V]':>12} {'arg V [rad]':>12} "
          f"{'|I| [A]':>10} {'arg I [rad]':>12}")
    for k, (v, i) in enumerate(zip(report.voltages, report.currents), 1):
        print(f"{k:>8} {v.magnitude:>12.6e} {v.phase:>12.5f} "
              f"{i.magnitude:>10.2f} {i.phase:>12.5f}")
    total = sum(i.to_complex() for i in report.currents)
    print(f"sum of terminal currents: {abs(total):.2e} A (conservation)")
    print(f"prescribed third current: {i3.magnitude:.2f} A at "
          f"{i3.phase:.5f} rad, recovered above")
    print()

    model = reduce(report)
    z = model.impedance
    print(f"Z_R = {z.magnitude:.6e} Ohm at {z.phase:.5f} rad "
          f"({z.to_complex().real:.6e} + {z.to_complex().imag:.6e}j)")
    p_lumped = predict_power(model, AMPLITUDE)
    print(f"power from Z_R:      {p_lumped:.6f} W")
    print(f"power from fields:   {report.P_h:.6f} W")
    print(f"complex power:       {report.S:.6f} VA")
    # V_R conj(I_1)/2 = 1/2 Z_R |I_1|^2 must equal S for a balanced set
    s_check = 0.5 * z.to_complex() * AMPLITUDE**2
    print(f"1/2 Z_R |I_1|^2:     {s_check:.6f} VA")


if __name__ == "__main__":
    main()
