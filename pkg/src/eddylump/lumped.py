"""Multi-terminal reduction to a single complex impedance and the planner
built on it.

For a balanced three-phase drive (I_2 = I_1*e^{i*2pi/3}, I_3 = I_1*e^{-i*2pi/3})
the furnace seen from its terminals collapses to one complex number

    Z_R = V_R / I_R,   V_R = (V_1 - V_3) + (V_2 - V_3)*e^{-i*2pi/3},  I_R = I_1,

chosen so that S = 1/2 * V_R * conj(I_R) reproduces the terminal complex
power.  With peak amplitudes, dissipated power and drive current then obey
P = 1/2 * Re(Z_R) * I^2.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import Phasor
from .fields import TerminalReport

KCL_REL_TOL = 1e-6
_ROT = cmath.exp(-2j * math.pi / 3.0)


class KCLError(ValueError):
    """Terminal currents do not sum to zero within tolerance."""

    def __init__(self, residual: float, scale: float):
        super().__init__(
            f"terminal currents violate current conservation: |sum I_k| = "
            f"{residual:.3e} vs {KCL_REL_TOL:g} * max|I_k| = {KCL_REL_TOL * scale:.3e}")
        self.residual = residual


class PassivityError(ValueError):
    """Reduced impedance has a nonpositive real part."""


@dataclass(frozen=True)
class ReducedModel:
    """Reduced impedance with its frequency and where it came from
    (a terminal-report identity or 'external measurement')."""

    impedance: Phasor
    frequency_hz: float
    provenance: str

    def __post_init__(self) -> None:
        if not (self.frequency_hz > 0.0):
            raise ValueError(f"frequency must be > 0, got {self.frequency_hz}")

    @property
    def resistance(self) -> float:
        return self.impedance.re


@dataclass(frozen=True, eq=False)
class CurveTable:
    """Sampled characteristic curve P(I) = 1/2 Re(Z_R) I^2, increasing in I."""

    currents: np.ndarray
    powers: np.ndarray
    model: ReducedModel


def complex_power(voltages, currents) -> complex:
    """S = 1/2 sum_k V_k conj(I_k); currents must satisfy conservation."""
    if len(voltages) != len(currents) or len(voltages) < 2:
        raise ValueError(
            f"need equally many voltages and currents (>= 2), got "
            f"{len(voltages)}/{len(currents)}")
    i = np.array([c.to_complex() for c in currents])
    v = np.array([p.to_complex() for p in voltages])
    scale = float(np.max(np.abs(i)))
    residual = float(abs(i.sum()))
    if scale > 0.0 and residual > KCL_REL_TOL * scale:
        raise KCLError(residual, scale)
    return complex(0.5 * np.sum(v * np.conj(i)))


def reduced_voltage(v1: Phasor, v2: Phasor, v3: Phasor) -> Phasor:
    """(V_1 - V_3) + (V_2 - V_3) * e^{-i*2pi/3}; reference-shift invariant."""
    z = (v1.to_complex() - v3.to_complex()) + (v2.to_complex() - v3.to_complex()) * _ROT
    return Phasor.from_complex(z)


def reduce(report: TerminalReport, allow_nonpassive: bool = False,
           provenance: str | None = None) -> ReducedModel:
    """Z_R = V_R / I_1 from a three-terminal report.

    Rejects Re(Z_R) <= 0 unless allow_nonpassive: a furnace absorbs power,
    so a nonpassive result signals a sign/convention mistake upstream.
    """
    if len(report.voltages) != 3:
        raise ValueError(
            f"reduction is defined for 3 terminals, report has {len(report.voltages)}")
    i1 = report.currents[0].to_complex()
    if i1 == 0.0:
        raise ValueError("reduction needs |I_1| > 0")
    vr = reduced_voltage(*report.voltages).to_complex()
    z = vr / i1
    if z.real <= 0.0 and not allow_nonpassive:
        raise PassivityError(
            f"reduced impedance {z:.6g} ohm has Re <= 0 (nonpassive); "
            "pass allow_nonpassive to keep it anyway")
    return ReducedModel(
        impedance=Phasor.from_complex(z),
        frequency_hz=report.frequency_hz,
        provenance=provenance if provenance is not None else "terminal report",
    )


def _require_passive(model: ReducedModel) -> float:
    r = model.resistance
    if r <= 0.0:
        raise PassivityError(
            f"planner needs Re(Z_R) > 0, model has {r:.6g} ohm")
    return r


def predict_power(model: ReducedModel, current: float) -> float:
    """P = 1/2 Re(Z_R) I^2 for a balanced drive of peak amplitude I."""
    if current < 0.0:
        raise ValueError(f"current amplitude must be >= 0, got {current}")
    return 0.5 * model.resistance * current * current


def required_current(model: ReducedModel, power: float) -> float:
    """I = sqrt(2 P / Re(Z_R)), the inverse of predict_power."""
    if power < 0.0:
        raise ValueError(f"target power must be >= 0, got {power}")
    r = _require_passive(model)
    return math.sqrt(2.0 * power / r)


def characteristic_curve(model: ReducedModel, i_min: float, i_max: float,
                         n_samples: int) -> CurveTable:
    """n uniformly spaced current samples, endpoints included."""
    if not (0.0 <= i_min < i_max):
        raise ValueError(f"need 0 <= i_min < i_max, got [{i_min}, {i_max}]")
    if n_samples < 2:
        raise ValueError(f"need n_samples >= 2, got {n_samples}")
    currents = np.linspace(i_min, i_max, n_samples)
    powers = np.array([predict_power(model, i) for i in currents])
    currents.setflags(write=False)
    powers.setflags(write=False)
    return CurveTable(currents=currents, powers=powers, model=model)


def reduced_to_json(model: ReducedModel) -> str:
    """Normative keys: {Z_R:{mag,phase}, frequency_hz, provenance}."""
    doc = {
        "Z_R": {"mag": model.impedance.magnitude, "phase": model.impedance.phase},
        "frequency_hz": model.frequency_hz,
        "provenance": model.provenance,
    }
    return json.dumps(doc, indent=2) + "\n"


def reduced_from_json(text: str) -> ReducedModel:
    try:
        doc = json.loads(text)
        return ReducedModel(
            impedance=Phasor.from_polar(doc["Z_R"]["mag"], doc["Z_R"]["phase"]),
            frequency_hz=float(doc["frequency_hz"]),
            provenance=str(doc["provenance"]),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed reduced model: {exc}") from exc


def write_curve_csv(table: CurveTable, stream) -> None:
    """CSV with header I_amp_A,P_watts."""
    lines = ["I_amp_A,P_watts"]
    lines += [f"{repr(float(i))},{repr(float(p))}"
              for i, p in zip(table.currents, table.powers)]
    text = "\n".join(lines) + "\n"
    if hasattr(stream, "write"):
        stream.write(text)
    else:
        with open(stream, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_curve_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "I_amp_A,P_watts":
        raise ValueError("malformed curve CSV: missing I_amp_A,P_watts header")
    rows = [ln.split(",") for ln in lines[1:]]
    currents = np.array([float(r[0]) for r in rows])
    powers = np.array([float(r[1]) for r in rows])
    return currents, powers
