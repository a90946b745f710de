"""Time-harmonic eddy-current solver with lumped impedance reduction.

The package covers the chain from a tagged tetrahedral mesh to an
operating plan: edge-element field solve with terminal current drive,
terminal voltage/power report, reduction of a three-terminal report to a
single equivalent impedance, and power/current planning formulas on top
of it.  Closed-form rod solutions live in `oracles` and back the
`verify` command.
"""

__version__ = "0.1.0"

from .core import (
    ConfigError,
    DriveSpec,
    Material,
    MaterialTable,
    Phasor,
    RegionMap,
    balanced_drive,
    load_config,
    polar_to_rect,
)
from .mesh import (
    DomainPartition,
    EdgeSet,
    Mesh,
    MeshError,
    MeshFormatError,
    concatenate,
    extract_edges,
    generate_rod_mesh,
    load_msh,
    partition,
    retag_boundary_band,
    rod_aspect_bound,
    rod_region_map,
    save_msh,
    surface_area,
    translate,
)
from .fem import (
    AssemblyError,
    DofMap,
    DofMapError,
    FieldSolution,
    LinearSystem,
    SolveError,
    SolverOptions,
    assemble,
    build_dofmap,
    solve,
)
from .fields import (
    ElementField,
    TerminalReport,
    element_fields,
    export_vtk,
    joule_power,
    report_from_json,
    report_to_json,
    terminal_currents,
    terminal_report,
)
from .lumped import (
    CurveTable,
    KCLError,
    PassivityError,
    ReducedModel,
    characteristic_curve,
    complex_power,
    predict_power,
    read_curve_csv,
    reduce,
    reduced_from_json,
    reduced_to_json,
    reduced_voltage,
    required_current,
    write_curve_csv,
)
from .oracles import (
    RodSpec,
    ac_resistance_ratio,
    ac_rod_internal_impedance,
    dc_rod_resistance,
    fd_rod_impedance,
    rod_current_profile,
    skin_depth,
)

__all__ = [
    "__version__",
    "ConfigError", "DriveSpec", "Material", "MaterialTable", "Phasor",
    "RegionMap", "balanced_drive", "load_config", "polar_to_rect",
    "DomainPartition", "EdgeSet", "Mesh", "MeshError", "MeshFormatError",
    "concatenate", "extract_edges", "generate_rod_mesh", "load_msh",
    "partition", "retag_boundary_band", "rod_aspect_bound", "rod_region_map",
    "save_msh", "surface_area", "translate",
    "AssemblyError", "DofMap", "DofMapError", "FieldSolution", "LinearSystem",
    "SolveError", "SolverOptions", "assemble", "build_dofmap", "solve",
    "ElementField", "TerminalReport", "element_fields", "export_vtk",
    "joule_power", "report_from_json", "report_to_json", "terminal_currents",
    "terminal_report",
    "CurveTable", "KCLError", "PassivityError", "ReducedModel",
    "characteristic_curve", "complex_power", "predict_power", "read_curve_csv",
    "reduce", "reduced_from_json", "reduced_to_json", "reduced_voltage",
    "required_current", "write_curve_csv",
    "RodSpec", "ac_resistance_ratio", "ac_rod_internal_impedance",
    "dc_rod_resistance", "fd_rod_impedance", "rod_current_profile",
    "skin_depth",
]
