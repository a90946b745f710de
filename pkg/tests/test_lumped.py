import cmath
import io
import json
import math

import numpy as np
import pytest

from eddylump import (
    CurveTable,
    KCLError,
    PassivityError,
    Phasor,
    ReducedModel,
    balanced_drive,
    characteristic_curve,
    complex_power,
    polar_to_rect,
    predict_power,
    read_curve_csv,
    reduce,
    reduced_from_json,
    reduced_to_json,
    reduced_voltage,
    required_current,
    terminal_report,
    write_curve_csv,
)
from eddylump.fields import TerminalReport

# reference measurement campaign on the three-phase furnace
I_REF = 3116.79
P_REF = 100_150.0
V1_REF = polar_to_rect(37.14, -0.89)
V2_REF = polar_to_rect(37.13, 0.15)
V3_REF = Phasor(0.0, 0.0)

R_PLANT = 2.0 * P_REF / I_REF**2  # 0.0206189...


def plant_model() -> ReducedModel:
    return ReducedModel(impedance=Phasor(R_PLANT, 0.0), frequency_hz=50.0,
                        provenance="external measurement")


def star_report(r=0.5, amplitude=100.0, base_phase=0.0) -> TerminalReport:
    """Symmetric resistive star: V_k = R I_k for a balanced drive."""
    currents = balanced_drive(amplitude, base_phase)
    voltages = tuple(Phasor.from_complex(r * c.to_complex()) for c in currents)
    s = complex_power(voltages, currents)
    return TerminalReport(frequency_hz=50.0, voltages=voltages,
                          currents=currents, S=s, P_h=s.real)


class TestComplexPower:
    def test_resistive_star_power(self):
        rep = star_report(r=0.5, amplitude=100.0)
        # P = 3/2 R I^2
        assert rep.S.real == pytest.approx(1.5 * 0.5 * 100.0**2, rel=1e-12)
        assert rep.S.imag == pytest.approx(0.0, abs=1e-9)

    def test_matches_direct_formula_on_random_triples(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            i12 = rng.normal(size=2) + 1j * rng.normal(size=2)
            i = np.array([i12[0], i12[1], -i12.sum()])
            vp = tuple(Phasor.from_complex(z) for z in v)
            ip = tuple(Phasor.from_complex(z) for z in i)
            want = 0.5 * np.sum(v * np.conj(i))
            got = complex_power(vp, ip)
            assert abs(got - want) <= 1e-12 * max(abs(want), 1.0)

    def test_common_mode_shift_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            i12 = rng.normal(size=2) + 1j * rng.normal(size=2)
            i = np.array([i12[0], i12[1], -i12.sum()])
            shift = complex(rng.normal(), rng.normal())
            s1 = complex_power(tuple(Phasor.from_complex(z) for z in v),
                               tuple(Phasor.from_complex(z) for z in i))
            s2 = complex_power(tuple(Phasor.from_complex(z + shift) for z in v),
                               tuple(Phasor.from_complex(z) for z in i))
            assert abs(s1 - s2) <= 1e-9 * max(abs(s1), 1.0)

    def test_kcl_violation_raises(self):
        v = (Phasor(1.0, 0.0),) * 3
        i = (Phasor(1.0, 0.0), Phasor(1.0, 0.0), Phasor(1.0, 0.0))
        with pytest.raises(KCLError) as err:
            complex_power(v, i)
        assert err.value.residual == pytest.approx(3.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            complex_power((Phasor(1, 0),), (Phasor(1, 0), Phasor(-1, 0)))


class TestReducedVoltage:
    def test_frozen_plant_value(self):
        # (V1 - V3) + (V2 - V3) e^{-i 2pi/3} on the measured voltages
        vr = reduced_voltage(V1_REF, V2_REF, V3_REF)
        assert vr.magnitude == pytest.approx(64.18565018508791, rel=1e-12)
        assert vr.phase == pytest.approx(-1.4171191671051948, rel=1e-12)

    def test_close_to_plant_processed_value(self):
        # the plant's own processing reports 64.3238 at -1.4172 rad;
        # recomputing from its rounded voltage table lands within 0.3%
        vr = reduced_voltage(V1_REF, V2_REF, V3_REF)
        assert abs(vr.magnitude - 64.3238) / 64.3238 <= 0.003
        assert abs(vr.phase - (-1.4172)) <= 0.002

    def test_reference_shift_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            c = complex(rng.normal(), rng.normal())
            a = reduced_voltage(*(Phasor.from_complex(z) for z in v))
            b = reduced_voltage(*(Phasor.from_complex(z + c) for z in v))
            assert abs(a.to_complex() - b.to_complex()) <= 1e-12 * max(
                abs(a.to_complex()), 1.0)

    def test_balanced_star_collapses_to_triple_resistance(self):
        r = 0.7
        i1, i2, i3 = balanced_drive(10.0, 0.3)
        vr = reduced_voltage(*(Phasor.from_complex(r * c.to_complex())
                               for c in (i1, i2, i3)))
        assert abs(vr.to_complex() - 3.0 * r * i1.to_complex()) <= 1e-12


class TestReduce:
    def test_star_impedance(self):
        model = reduce(star_report(r=0.5))
        assert model.impedance.re == pytest.approx(1.5, rel=1e-12)
        assert abs(model.impedance.im) <= 1e-12
        assert model.frequency_hz == 50.0
        assert model.provenance == "terminal report"
        assert model.resistance == model.impedance.re

    def test_reduction_consistent_with_complex_power(self, three_terminal_solution):
        # for an exactly balanced drive, 1/2 V_R conj(I_1) equals S
        rep = terminal_report(three_terminal_solution)
        model = reduce(rep)
        i1 = rep.currents[0].to_complex()
        s_reduced = 0.5 * model.impedance.to_complex() * i1 * i1.conjugate()
        assert abs(s_reduced - rep.S) <= 1e-9 * abs(rep.S)
        assert model.resistance == pytest.approx(2.0 * rep.P_h / abs(i1) ** 2,
                                                 rel=1e-6)

    def test_custom_provenance(self):
        model = reduce(star_report(), provenance="bench A")
        assert model.provenance == "bench A"

    def test_needs_three_terminals(self):
        rep = star_report()
        two = TerminalReport(frequency_hz=50.0, voltages=rep.voltages[:2],
                             currents=(rep.currents[0], -rep.currents[0]),
                             S=rep.S, P_h=rep.P_h)
        with pytest.raises(ValueError, match="3 terminals"):
            reduce(two)

    def test_needs_nonzero_current(self):
        rep = star_report()
        dead = TerminalReport(frequency_hz=50.0, voltages=rep.voltages,
                              currents=(Phasor(0.0, 0.0),) * 3,
                              S=0.0 + 0.0j, P_h=0.0)
        with pytest.raises(ValueError, match="I_1"):
            reduce(dead)

    def test_passivity_gate(self):
        rep = star_report(r=0.5)
        flipped = TerminalReport(
            frequency_hz=50.0,
            voltages=tuple(-v for v in rep.voltages),
            currents=rep.currents,
            S=-rep.S, P_h=rep.P_h)
        with pytest.raises(PassivityError):
            reduce(flipped)
        model = reduce(flipped, allow_nonpassive=True)
        assert model.resistance == pytest.approx(-1.5, rel=1e-12)


class TestPlanner:
    def test_power_at_campaign_current(self):
        assert predict_power(plant_model(), I_REF) == pytest.approx(P_REF,
                                                                    rel=1e-12)

    @pytest.mark.parametrize("power,current_ref", [
        (109_980.0, 3266.55),
        (119_980.0, 3411.80),
        (159_970.0, 3939.61),
    ])
    def test_required_current_matches_campaign_table(self, power, current_ref):
        amps = required_current(plant_model(), power)
        assert abs(amps - current_ref) / current_ref <= 1e-3
        # and it inverts predict_power exactly
        assert predict_power(plant_model(), amps) == pytest.approx(power,
                                                                   rel=1e-12)

    def test_scaled_terminal_voltage_matches_campaign_table(self):
        for current_ref, v_ref in ((3266.55, 38.92), (3411.80, 40.65),
                                   (3939.61, 46.94)):
            v1 = V1_REF.magnitude * current_ref / I_REF
            assert abs(v1 - v_ref) / v_ref <= 1e-3

    def test_predict_power_input_validation(self):
        assert predict_power(plant_model(), 0.0) == 0.0
        with pytest.raises(ValueError):
            predict_power(plant_model(), -1.0)

    def test_predict_power_has_no_passivity_gate(self):
        bad = ReducedModel(impedance=Phasor(-0.5, 0.0), frequency_hz=50.0,
                           provenance="diagnostic")
        assert predict_power(bad, 10.0) == pytest.approx(-25.0)

    def test_required_current_needs_positive_resistance(self):
        bad = ReducedModel(impedance=Phasor(-0.5, 0.0), frequency_hz=50.0,
                           provenance="diagnostic")
        with pytest.raises(PassivityError):
            required_current(bad, 100.0)
        with pytest.raises(ValueError):
            required_current(plant_model(), -1.0)


class TestCurve:
    def test_samples_and_endpoints(self):
        table = characteristic_curve(plant_model(), 100.0, 500.0, 5)
        assert np.allclose(table.currents, [100, 200, 300, 400, 500])
        assert table.powers[0] == pytest.approx(
            0.5 * R_PLANT * 100.0**2, rel=1e-12)
        assert table.powers[-1] == pytest.approx(
            0.5 * R_PLANT * 500.0**2, rel=1e-12)
        assert table.model is not None

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            characteristic_curve(plant_model(), 500.0, 100.0, 5)
        with pytest.raises(ValueError):
            characteristic_curve(plant_model(), -1.0, 100.0, 5)
        with pytest.raises(ValueError):
            characteristic_curve(plant_model(), 0.0, 100.0, 1)

    def test_curve_tolerates_nonpassive_model(self):
        bad = ReducedModel(impedance=Phasor(-0.5, 0.0), frequency_hz=50.0,
                           provenance="diagnostic")
        table = characteristic_curve(bad, 0.0, 10.0, 3)
        assert table.powers[-1] < 0.0


class TestSerialization:
    def test_reduced_json_round_trip(self):
        model = reduce(star_report(r=0.5))
        text = reduced_to_json(model)
        doc = json.loads(text)
        assert set(doc) == {"Z_R", "frequency_hz", "provenance"}
        assert set(doc["Z_R"]) == {"mag", "phase"}
        back = reduced_from_json(text)
        assert back.impedance.magnitude == model.impedance.magnitude
        assert back.impedance.phase == model.impedance.phase
        assert back.frequency_hz == model.frequency_hz
        assert back.provenance == model.provenance

    def test_malformed_reduced_json(self):
        with pytest.raises(ValueError):
            reduced_from_json("{}")
        with pytest.raises(ValueError):
            reduced_from_json("nonsense")

    def test_curve_csv_round_trip(self):
        table = characteristic_curve(plant_model(), 0.0, 4500.0, 7)
        buf = io.StringIO()
        write_curve_csv(table, buf)
        text = buf.getvalue()
        assert text.splitlines()[0] == "I_amp_A,P_watts"
        currents, powers = read_curve_csv(text)
        assert np.array_equal(currents, table.currents)
        assert np.array_equal(powers, table.powers)

    def test_curve_csv_header_enforced(self):
        with pytest.raises(ValueError):
            read_curve_csv("amps,watts\n1.0,2.0\n")
