"""From one measured operating point to a full power-vs-current plan.

Input: a single balanced measurement on a three-electrode resistance
furnace (phase current, two line voltage phasors, total real power).
Only the real part of the reduced impedance is observable from such a
measurement, and that is all the planner needs: P(I) = 1/2 Re(Z_R) I**2.
The script reconstructs Re(Z_R), checks it against the reduced voltage
phasor built from the measured line voltages, then prints the currents
required to hit three production power targets and the terminal voltage
each implies.
"""

from eddylump import (
    Phasor,
    polar_to_rect,
    predict_power,
    reduced_voltage,
    required_current,
)
from eddylump.lumped import ReducedModel, characteristic_curve

# measurement campaign, balanced drive at 50 Hz
I_MEAS = 3116.79                      # A peak per phase
P_MEAS = 100_150.0                    # W
V1 = polar_to_rect(37.14, -0.89)      # V, phase 1 terminal
V2 = polar_to_rect(37.13, 0.15)       # V, phase 2 terminal
V3 = Phasor(0.0, 0.0)                 # reference terminal

POWER_TARGETS = (109_980.0, 119_980.0, 159_970.0)  # W


def main():
    # P = 1/2 Re(Z_R) I^2, so Re(Z_R) = 2 P / I^2
    model = ReducedModel(impedance=Phasor(2.0 * P_MEAS / I_MEAS**2, 0.0),
                         frequency_hz=50.0,
                         provenance="measurement campaign")
    print(f"Re(Z_R) from power:    {model.impedance.to_complex().real:.6f} Ohm")

    vr = reduced_voltage(V1, V2, V3)
    print(f"reduced voltage:       {vr.magnitude:.4f} V at {vr.phase:.4f} rad")
    print(f"|V_R| / I from phasors: {vr.magnitude / I_MEAS * 1e3:.6f} mOhm "
          f"(magnitude of Z_R, includes the reactive part)")
    print()

    print(f"{'target P [kW]':>14} {'I [A]':>10} {'|V_1| [V]':>10} "
          f"{'check P(I) [kW]':>16}")
    for p in POWER_TARGETS:
        amps = required_current(model, p)
        v1 = 37.14 * amps / I_MEAS  # terminal voltage scales linearly
        print(f"{p / 1e3:>14.2f} {amps:>10.2f} {v1:>10.2f} "
              f"{predict_power(model, amps) / 1e3:>16.2f}")
    print()

    print("characteristic curve around the operating window:")
    curve = characteristic_curve(model, 3000.0, 4000.0, 5)
    for amps, watts in zip(curve.currents, curve.powers):
        print(f"  {amps:>8.1f} A -> {watts / 1e3:>8.2f} kW")


if __name__ == "__main__":
    main()
