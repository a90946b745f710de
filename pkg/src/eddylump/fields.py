"""Post-processing of a FieldSolution: physical fields, integral quantities
and file exports.

Fields are reported elementwise constant (centroid evaluation), matching
the approximation order.  Integral quantities use a 4-point second-order
tet rule, exact for the quadratic integrands here and consistent with the
closed-form assembly integrals, so the discrete power identity
Re(S) = P_h holds to solver precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Phasor
from .fem import FieldSolution, _geometry, _edge_vertex_grads, _material_arrays

# degree-2 tet rule: 4 symmetric points, weight 1/4 each
_QA = 0.5854101966249685
_QB = 0.13819660112501053
_QP = np.array([
    [_QA, _QB, _QB, _QB],
    [_QB, _QA, _QB, _QB],
    [_QB, _QB, _QA, _QB],
    [_QB, _QB, _QB, _QA],
])


@dataclass(frozen=True, eq=False)
class ElementField:
    """Per-tet constant fields: J and its Joule density on conductors
    (zero elsewhere), B = curl A and H = B/mu everywhere."""

    J: np.ndarray
    joule_density: np.ndarray
    B: np.ndarray
    H: np.ndarray


@dataclass(frozen=True)
class TerminalReport:
    """Terminal phasors (ground last, V_N = 0), complex power S = 1/2 sum
    V_k conj(I_k), and the volume Joule power P_h."""

    frequency_hz: float
    voltages: tuple[Phasor, ...]
    currents: tuple[Phasor, ...]
    S: complex
    P_h: float


def _conductor_data(sol: FieldSolution):
    """Geometry and potentials restricted to conductor tets."""
    part = sol.partition
    mesh = part.mesh
    cond = part.conductor_tets
    g, vol = _geometry(mesh.vertices, mesh.tets)
    sigma, mu = _material_arrays(sol.materials, mesh.tet_tags)
    ga, gb, a_loc, b_loc = _edge_vertex_grads(g, sol.edges, cond)
    coef = sol.edge_coeffs[sol.edges.tet_edges[cond]]
    v_node = sol.node_potential[mesh.tets[cond]]
    grad_v = np.einsum("mi,mid->md", v_node, g[cond])
    a_centroid = np.einsum("ml,mld->md", coef, (gb - ga) / 4.0)
    return g, vol, sigma, mu, cond, ga, gb, a_loc, b_loc, coef, grad_v, a_centroid


def element_fields(sol: FieldSolution) -> ElementField:
    """Centroid J = -sigma*(i*omega*A + grad V) on conductors; B = curl A."""
    part = sol.partition
    mesh = part.mesh
    g, vol, sigma, mu, cond, ga, gb, _, _, coef, grad_v, a_centroid = _conductor_data(sol)

    ga_all, gb_all, _, _ = _edge_vertex_grads(g, sol.edges, np.arange(mesh.n_tets))
    ce = 2.0 * np.cross(ga_all, gb_all)
    coef_all = sol.edge_coeffs[sol.edges.tet_edges]
    B = np.einsum("ml,mld->md", coef_all, ce)
    H = B / mu[:, None]

    J = np.zeros((mesh.n_tets, 3), dtype=np.complex128)
    dens = np.zeros(mesh.n_tets)
    if len(cond):
        E = -(1j * sol.omega * a_centroid + grad_v)
        J[cond] = sigma[cond, None] * E
        dens[cond] = 0.5 * sigma[cond] * np.einsum("md,md->m", E, E.conj()).real

    for arr in (J, dens, B, H):
        arr.setflags(write=False)
    return ElementField(J=J, joule_density=dens, B=B, H=H)


def joule_power(sol: FieldSolution) -> float:
    """P_h = int |J|^2/(2 sigma) over conductors, by the exact degree-2 rule."""
    g, vol, sigma, mu, cond, ga, gb, a_loc, b_loc, coef, grad_v, _ = _conductor_data(sol)
    if not len(cond):
        return 0.0
    total = np.zeros(len(cond))
    for q in range(4):
        lam_a = _QP[q][a_loc]
        lam_b = _QP[q][b_loc]
        a_q = (np.einsum("ml,mld->md", coef * lam_a, gb)
               - np.einsum("ml,mld->md", coef * lam_b, ga))
        e_q = -(1j * sol.omega * a_q + grad_v)
        total += 0.25 * np.einsum("md,md->m", e_q, e_q.conj()).real
    return float(np.sum(vol[cond] * 0.5 * sigma[cond] * total))


def terminal_currents(sol: FieldSolution) -> np.ndarray:
    """I_k = int_conductors sigma*(i*omega*A + grad V) . grad w_k for every
    terminal, w_k the nodal hat lift of terminal k (1 on its nodes).

    This is the volume formula dual to the prescribed-current constraint, so
    for k < N it reproduces the prescription to solver precision, and the
    full set sums to zero identically (grad of a constant test function).
    """
    part = sol.partition
    mesh = part.mesh
    g, vol, sigma, mu, cond, ga, gb, a_loc, b_loc, coef, grad_v, a_centroid = _conductor_data(sol)
    n_term = part.n_terminals
    out = np.zeros(n_term, dtype=np.complex128)
    if not len(cond) or not n_term:
        return out
    flux = 1j * sol.omega * a_centroid + grad_v  # (mc,3), constant+mean parts
    weight = sigma[cond] * vol[cond]
    tets_c = mesh.tets[cond]
    for k in range(n_term):
        member = np.isin(tets_c, part.terminal_nodes[k]).astype(np.float64)
        grad_w = np.einsum("mi,mid->md", member, g[cond])
        out[k] = np.sum(weight * np.einsum("md,md->m", flux, grad_w))
    return out


def terminal_report(sol: FieldSolution) -> TerminalReport:
    """Voltages from the terminal unknowns, currents recomputed by the volume
    lift formula, S = 1/2 sum V_k conj(I_k), P_h from joule_power."""
    if sol.drive is None:
        raise ValueError("terminal_report needs a driven solution")
    currents = terminal_currents(sol)
    voltages = sol.terminal_potentials
    S = 0.5 * np.sum(voltages * np.conj(currents))
    return TerminalReport(
        frequency_hz=sol.drive.frequency_hz,
        voltages=tuple(Phasor.from_complex(v) for v in voltages),
        currents=tuple(Phasor.from_complex(i) for i in currents),
        S=complex(S),
        P_h=joule_power(sol),
    )


def report_to_json(report: TerminalReport) -> str:
    """Serialize with the normative keys:
    {frequency_hz, terminals:[{V:{mag,phase}, I:{mag,phase}}...], S:{re,im}, P_h}."""
    doc = {
        "frequency_hz": report.frequency_hz,
        "terminals": [
            {
                "V": {"mag": v.magnitude, "phase": v.phase},
                "I": {"mag": i.magnitude, "phase": i.phase},
            }
            for v, i in zip(report.voltages, report.currents)
        ],
        "S": {"re": report.S.real, "im": report.S.imag},
        "P_h": report.P_h,
    }
    return json.dumps(doc, indent=2) + "\n"


def report_from_json(text: str) -> TerminalReport:
    try:
        doc = json.loads(text)
        voltages = tuple(
            Phasor.from_polar(t["V"]["mag"], t["V"]["phase"]) for t in doc["terminals"])
        currents = tuple(
            Phasor.from_polar(t["I"]["mag"], t["I"]["phase"]) for t in doc["terminals"])
        return TerminalReport(
            frequency_hz=float(doc["frequency_hz"]),
            voltages=voltages,
            currents=currents,
            S=complex(doc["S"]["re"], doc["S"]["im"]),
            P_h=float(doc["P_h"]),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed terminal report: {exc}") from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def export_vtk(sol: FieldSolution, path) -> None:
    """Legacy ASCII VTK unstructured grid with per-cell Re_J, Im_J, abs_J,
    joule_density, Re_B, Im_B (the real/imaginary parts, modulus of J, Joule
    density and B field).  Deterministic formatting: identical solutions
    export byte-identical files."""
    part = sol.partition
    mesh = part.mesh
    ef = element_fields(sol)
    lines = [
        "# vtk DataFile Version 3.0",
        "eddy-current fields (phasor parts, peak convention)",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    lines += [" ".join(_fmt(c) for c in p) for p in mesh.vertices]
    lines.append(f"CELLS {mesh.n_tets} {5 * mesh.n_tets}")
    lines += ["4 " + " ".join(str(int(v)) for v in tet) for tet in mesh.tets]
    lines.append(f"CELL_TYPES {mesh.n_tets}")
    lines += ["10"] * mesh.n_tets
    lines.append(f"CELL_DATA {mesh.n_tets}")

    def vectors(name: str, arr: np.ndarray):
        lines.append(f"VECTORS {name} double")
        lines.extend(" ".join(_fmt(c) for c in row) for row in arr)

    def scalars(name: str, arr: np.ndarray):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_fmt(v) for v in arr)

    vectors("Re_J", ef.J.real)
    vectors("Im_J", ef.J.imag)
    scalars("abs_J", np.linalg.norm(ef.J, axis=1))
    scalars("joule_density", ef.joule_density)
    vectors("Re_B", ef.B.real)
    vectors("Im_B", ef.B.imag)

    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
