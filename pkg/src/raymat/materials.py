"""Building-material electrical parameters (ITU-R P.2040 coefficient model).

Each material is described by the four ITU coefficients that set its
frequency-dependent permittivity and conductivity, plus an RMS surface
roughness used by the optional specular attenuation factor.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class MaterialParams:
    """ITU-R P.2040 coefficients a, b, c, d plus surface roughness.

    Relative permittivity (real part) is a*f^b and conductivity is c*f^d
    with f in GHz. ``roughness_sigma`` is the RMS surface roughness in
    meters; 0 means optically smooth.
    """

    name: str
    a: float
    b: float
    c: float
    d: float
    roughness_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("material name must be non-empty")
        if self.a <= 0:
            raise ValueError(f"material {self.name!r}: coefficient a must be > 0")
        if self.roughness_sigma < 0:
            raise ValueError(f"material {self.name!r}: roughness_sigma must be >= 0")


# ITU-R P.2040-1 coefficients; roughness values for typical indoor finishes.
WOOD = MaterialParams("wood", 1.99, 0.0, 0.0047, 1.0718, roughness_sigma=0.4e-3)
PLASTER = MaterialParams("plaster", 2.94, 0.0, 0.0116, 0.7076, roughness_sigma=0.2e-3)
GLASS = MaterialParams("glass", 6.27, 0.0, 0.0043, 1.1925, roughness_sigma=0.0)

PRESETS: dict[str, MaterialParams] = {m.name: m for m in (WOOD, PLASTER, GLASS)}


def preset(name: str) -> MaterialParams:
    """Return a built-in material by name.

    Raises:
        KeyError: if the name is not a built-in preset.
    """
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown material {name!r}; built-ins: {', '.join(sorted(PRESETS))}"
        ) from None


def parse_material_line(line: str) -> MaterialParams:
    """Parse one table line ``name, a, b, c, d, sigma_m``.

    Fields may be separated by commas, whitespace, or both.
    """
    fields = line.replace(",", " ").split()
    if len(fields) != 6:
        raise ValueError(
            f"expected 6 fields (name, a, b, c, d, sigma_m), got {len(fields)}: {line!r}"
        )
    name = fields[0]
    try:
        a, b, c, d, sigma = (float(x) for x in fields[1:])
    except ValueError as err:
        raise ValueError(f"non-numeric field in material line {line!r}") from err
    return MaterialParams(name, a, b, c, d, roughness_sigma=sigma)


def load_material_table(path) -> list[MaterialParams]:
    """Load materials from a plain-text table, one material per line.

    Blank lines and lines starting with ``#`` are ignored.
    """
    materials = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                materials.append(parse_material_line(line))
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: {err}") from None
    return materials
