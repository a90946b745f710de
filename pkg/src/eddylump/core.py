"""Phasor arithmetic, material tables, drive specification and config parsing.

Sign convention used throughout the package: a physical field F(x, t) is
recovered from its phasor F(x) as Re[F(x) * exp(i*omega*t)].  Magnitudes are
peak amplitudes, not RMS, so every time-averaged power formula carries an
explicit factor 1/2.  Phases are radians in (-pi, pi].
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TWO_THIRDS_PI = 2.0 * math.pi / 3.0


class ConfigError(ValueError):
    """Raised when a problem configuration is malformed or inconsistent."""


def _wrap_phase(phase: float) -> float:
    """Map an angle in radians into (-pi, pi]."""
    p = math.fmod(phase, 2.0 * math.pi)
    if p > math.pi:
        p -= 2.0 * math.pi
    elif p <= -math.pi:
        p += 2.0 * math.pi
    return p


@dataclass(frozen=True)
class Phasor:
    """Complex amplitude stored in rectangular form.

    ``magnitude``/``phase`` are derived views; ``phase`` is normalized to
    (-pi, pi] and is 0.0 for an exact zero phasor.
    """

    re: float
    im: float

    @classmethod
    def from_polar(cls, magnitude: float, phase: float) -> "Phasor":
        if magnitude < 0.0:
            raise ValueError(f"phasor magnitude must be >= 0, got {magnitude}")
        p = _wrap_phase(phase)
        return cls(magnitude * math.cos(p), magnitude * math.sin(p))

    @classmethod
    def from_complex(cls, z: complex) -> "Phasor":
        return cls(z.real, z.imag)

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    @property
    def magnitude(self) -> float:
        return math.hypot(self.re, self.im)

    @property
    def phase(self) -> float:
        if self.re == 0.0 and self.im == 0.0:
            return 0.0
        p = math.atan2(self.im, self.re)
        # atan2 returns [-pi, pi]; fold the single excluded endpoint.
        if p <= -math.pi:
            p += 2.0 * math.pi
        return p

    def conjugate(self) -> "Phasor":
        return Phasor(self.re, -self.im)

    def __add__(self, other: "Phasor") -> "Phasor":
        return Phasor(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "Phasor") -> "Phasor":
        return Phasor(self.re - other.re, self.im - other.im)

    def __mul__(self, other):
        if isinstance(other, Phasor):
            return Phasor(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        return Phasor(self.re * other, self.im * other)

    __rmul__ = __mul__

    def __neg__(self) -> "Phasor":
        return Phasor(-self.re, -self.im)

    def __abs__(self) -> float:
        return self.magnitude


def polar_to_rect(magnitude: float, phase: float) -> Phasor:
    """Build a phasor from peak magnitude and phase in radians."""
    return Phasor.from_polar(magnitude, phase)


def balanced_drive(amplitude: float, base_phase: float = 0.0) -> tuple[Phasor, Phasor, Phasor]:
    """Three-phase balanced current set I_2 = I_1*e^{i*2pi/3}, I_3 = I_1*e^{-i*2pi/3}.

    Equal amplitudes, phases (base, base + 2pi/3, base - 2pi/3); the triple
    sums to zero up to rounding.
    """
    if amplitude < 0.0:
        raise ValueError(f"drive amplitude must be >= 0, got {amplitude}")
    return (
        Phasor.from_polar(amplitude, base_phase),
        Phasor.from_polar(amplitude, base_phase + TWO_THIRDS_PI),
        Phasor.from_polar(amplitude, base_phase - TWO_THIRDS_PI),
    )


@dataclass(frozen=True)
class Material:
    """Electric conductivity sigma [S/m] and magnetic permeability mu [H/m]."""

    sigma: float
    mu: float

    def __post_init__(self) -> None:
        if not (self.sigma >= 0.0) or not math.isfinite(self.sigma):
            raise ConfigError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not (self.mu > 0.0) or not math.isfinite(self.mu):
            raise ConfigError(f"mu must be finite and > 0, got {self.mu}")


@dataclass(frozen=True)
class MaterialTable:
    """Map from volume region tag to material properties."""

    materials: dict[int, Material]

    def __post_init__(self) -> None:
        if not self.materials:
            raise ConfigError("material table is empty")
        for tag in self.materials:
            if not isinstance(tag, int):
                raise ConfigError(f"material tag must be an integer, got {tag!r}")

    def sigma(self, tag: int) -> float:
        return self._get(tag).sigma

    def mu(self, tag: int) -> float:
        return self._get(tag).mu

    def _get(self, tag: int) -> Material:
        try:
            return self.materials[tag]
        except KeyError:
            raise ConfigError(f"no material defined for region tag {tag}") from None

    @property
    def tags(self) -> frozenset[int]:
        return frozenset(self.materials)


@dataclass(frozen=True)
class DriveSpec:
    """Operating frequency and the prescribed terminal currents.

    ``terminal_currents[k]`` is the current phasor entering terminal k+1.
    The last terminal (index n_terminals) is the voltage reference and has no
    prescribed current; its current is recovered from current conservation.
    """

    frequency_hz: float
    terminal_currents: tuple[Phasor, ...]

    def __post_init__(self) -> None:
        if not (self.frequency_hz > 0.0) or not math.isfinite(self.frequency_hz):
            raise ConfigError(f"frequency_hz must be finite and > 0, got {self.frequency_hz}")
        if len(self.terminal_currents) < 1:
            raise ConfigError("drive must prescribe at least one terminal current")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency_hz

    @property
    def n_terminals(self) -> int:
        return len(self.terminal_currents) + 1


@dataclass(frozen=True)
class RegionMap:
    """Assignment of mesh tags to roles.

    Volume tags split into conductors and dielectrics; heater tags pick out
    the conductor subset whose dissipation is the quantity of interest.
    Surface tags name the truncation boundary (``outer``) and the terminal
    contacts in order; the last terminal is the ground reference.
    """

    conductor_tags: frozenset[int]
    dielectric_tags: frozenset[int]
    heater_tags: frozenset[int] = field(default_factory=frozenset)
    outer_tag: int = 0
    terminal_tags: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.conductor_tags & self.dielectric_tags:
            both = sorted(self.conductor_tags & self.dielectric_tags)
            raise ConfigError(f"tags {both} declared both conductor and dielectric")
        if not self.heater_tags <= self.conductor_tags:
            bad = sorted(self.heater_tags - self.conductor_tags)
            raise ConfigError(f"heater tags {bad} are not conductor tags")
        if len(set(self.terminal_tags)) != len(self.terminal_tags):
            raise ConfigError(f"terminal tags must be distinct, got {self.terminal_tags}")
        if self.outer_tag in self.terminal_tags:
            raise ConfigError(f"outer tag {self.outer_tag} reused as a terminal tag")
        if len(self.terminal_tags) == 1:
            raise ConfigError("a single terminal cannot carry a return current; use 0 or >= 2")

    @property
    def volume_tags(self) -> frozenset[int]:
        return self.conductor_tags | self.dielectric_tags

    @property
    def surface_tags(self) -> frozenset[int]:
        return frozenset((self.outer_tag,)) | frozenset(self.terminal_tags)

    @property
    def n_terminals(self) -> int:
        return len(self.terminal_tags)


_MATERIAL_KEYS = {"sigma", "mu"}
_DRIVE_KEYS = {"frequency_hz", "terminals"}
_TERMINAL_KEYS = {"magnitude", "phase"}
_REGION_KEYS = {"conductor_tags", "dielectric_tags", "heater_tags", "boundary"}
_TOP_KEYS = {"materials", "drive", "regions"}


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _as_int_list(value, key: str) -> list[int]:
    if not isinstance(value, list) or any(
        isinstance(v, bool) or not isinstance(v, int) for v in value
    ):
        raise ConfigError(f"{key} must be a list of integer tags, got {value!r}")
    return list(value)


def load_config(source) -> tuple[MaterialTable, DriveSpec, RegionMap]:
    """Parse a TOML problem configuration.

    ``source`` is a TOML string or a readable text/binary stream.  Layout:

        [materials.<tag>]
        sigma = <S/m>       # >= 0; > 0 required on conductor tags
        mu = <H/m>          # > 0

        [drive]
        frequency_hz = <Hz>
        terminals = [{magnitude = <A>, phase = <rad>}, ...]   # N-1 entries

        [regions]
        conductor_tags = [...]
        dielectric_tags = [...]
        heater_tags = [...]     # optional, subset of conductor_tags
        [regions.boundary]
        outer = <tag>
        terminal_1 = <tag>
        ...
        terminal_N = <tag>      # terminal_N is the ground reference

    Unknown keys anywhere are rejected, naming the offending key.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc

    _reject_unknown(doc, _TOP_KEYS, "config root")
    for section in ("materials", "drive", "regions"):
        if section not in doc:
            raise ConfigError(f"missing required section [{section}]")

    mats: dict[int, Material] = {}
    if not isinstance(doc["materials"], dict):
        raise ConfigError("[materials] must be a table of per-tag subtables")
    for tag_str, entry in doc["materials"].items():
        try:
            tag = int(tag_str)
        except ValueError:
            raise ConfigError(f"material tag {tag_str!r} is not an integer") from None
        if not isinstance(entry, dict):
            raise ConfigError(f"[materials.{tag_str}] must be a table")
        _reject_unknown(entry, _MATERIAL_KEYS, f"[materials.{tag_str}]")
        for key in _MATERIAL_KEYS:
            if key not in entry:
                raise ConfigError(f"missing key {key!r} in [materials.{tag_str}]")
        mats[tag] = Material(
            sigma=_as_number(entry["sigma"], f"materials.{tag_str}.sigma"),
            mu=_as_number(entry["mu"], f"materials.{tag_str}.mu"),
        )
    table = MaterialTable(mats)

    drv = doc["drive"]
    _reject_unknown(drv, _DRIVE_KEYS, "[drive]")
    if "frequency_hz" not in drv:
        raise ConfigError("missing key 'frequency_hz' in [drive]")
    if "terminals" not in drv or not isinstance(drv["terminals"], list) or not drv["terminals"]:
        raise ConfigError("[drive] must list at least one terminal current in 'terminals'")
    currents = []
    for i, term in enumerate(drv["terminals"], start=1):
        if not isinstance(term, dict):
            raise ConfigError(f"drive terminal {i} must be a table with magnitude/phase")
        _reject_unknown(term, _TERMINAL_KEYS, f"drive terminal {i}")
        for key in _TERMINAL_KEYS:
            if key not in term:
                raise ConfigError(f"missing key {key!r} in drive terminal {i}")
        currents.append(
            polar_to_rect(
                _as_number(term["magnitude"], f"terminal {i} magnitude"),
                _as_number(term["phase"], f"terminal {i} phase"),
            )
        )
    drive = DriveSpec(
        frequency_hz=_as_number(drv["frequency_hz"], "drive.frequency_hz"),
        terminal_currents=tuple(currents),
    )

    reg = doc["regions"]
    _reject_unknown(reg, _REGION_KEYS, "[regions]")
    for key in ("conductor_tags", "dielectric_tags"):
        if key not in reg:
            raise ConfigError(f"missing key {key!r} in [regions]")
    if "boundary" not in reg or not isinstance(reg["boundary"], dict):
        raise ConfigError("missing [regions.boundary] table")
    boundary = reg["boundary"]
    if "outer" not in boundary:
        raise ConfigError("missing key 'outer' in [regions.boundary]")
    term_keys = [k for k in boundary if k.startswith("terminal_")]
    allowed_bnd = {"outer"} | set(term_keys)
    _reject_unknown(boundary, allowed_bnd, "[regions.boundary]")
    n_term = len(term_keys)
    expected = [f"terminal_{i}" for i in range(1, n_term + 1)]
    if sorted(term_keys) != sorted(expected):
        raise ConfigError(
            f"terminal keys must be terminal_1..terminal_{n_term}, got {sorted(term_keys)}"
        )
    terminal_tags = tuple(int(boundary[k]) for k in expected)

    region_map = RegionMap(
        conductor_tags=frozenset(_as_int_list(reg["conductor_tags"], "conductor_tags")),
        dielectric_tags=frozenset(_as_int_list(reg["dielectric_tags"], "dielectric_tags")),
        heater_tags=frozenset(_as_int_list(reg.get("heater_tags", []), "heater_tags")),
        outer_tag=int(boundary["outer"]),
        terminal_tags=terminal_tags,
    )

    if drive.n_terminals != region_map.n_terminals:
        raise ConfigError(
            f"drive prescribes {len(drive.terminal_currents)} currents, which needs "
            f"{drive.n_terminals} terminals, but [regions.boundary] declares "
            f"{region_map.n_terminals}"
        )
    missing = sorted(region_map.volume_tags - table.tags)
    if missing:
        raise ConfigError(f"region tags {missing} have no material entry")
    for tag in sorted(region_map.conductor_tags):
        if table.sigma(tag) <= 0.0:
            raise ConfigError(f"conductor tag {tag} must have sigma > 0, got {table.sigma(tag)}")
    for tag in sorted(region_map.dielectric_tags):
        if table.sigma(tag) != 0.0:
            raise ConfigError(f"dielectric tag {tag} must have sigma = 0, got {table.sigma(tag)}")
    return table, drive, region_map
