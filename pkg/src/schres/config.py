"""Run configuration: a sectioned plain-text format.

    [domain]
    radius = 1.0
    base_h = 0.05
    level = 3

    [potential]
    support 1
    piece disk(0,0;1): 2

    [search]
    re_min = -4.0
    ...

    [output]
    precision = 6

The [potential] block is passed verbatim to the potential parser; other
sections hold key = value pairs.  Every key has a default matching the
reference setup, so the shipped example configs stay short.
"""

from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .oracle import Rectangle
from .potential import parse_potential
from .sim import SimConfig

MAX_LEVEL = 5
LARGE_LEVEL = 5  # needs an explicit opt-in flag


@dataclass(frozen=True)
class RunConfig:
    potential_text: str = "support 1\n"
    radius: float = 1.0
    base_h: float = 0.05
    level: int = 1
    levels: int = 4                     # converge ladder depth
    re_min: float = -4.0
    re_max: float = 4.0
    im_min: float = -4.0
    im_max: float = -0.5
    truncation: int = 20
    quad_order: int = 7
    n_quad: int = 32
    tol_ind: float = 0.1
    tol_eps: float = 1e-3
    r0: float = 0.25
    seed: int = 0
    max_levels: int = 64
    region_cap: int = 20000
    workers: int = 1
    track: int = 2                      # resonances tracked by converge
    oracle_n_max: int = 10
    oracle_grid_step: float = 0.05
    map_resolution: int = 256
    precision: int = 6

    def __post_init__(self):
        if self.im_max >= 0:
            raise ConfigError("search region must lie in the lower half-plane (im_max < 0)")
        if not 1 <= self.level <= MAX_LEVEL:
            raise ConfigError(f"level must be in [1, {MAX_LEVEL}]")
        if not 1 <= self.levels <= MAX_LEVEL:
            raise ConfigError(f"levels must be in [1, {MAX_LEVEL}]")
        if not (0 < self.base_h < self.radius):
            raise ConfigError("need 0 < base_h < radius")
        try:
            self.rectangle()
        except Exception as err:
            raise ConfigError(f"bad search rectangle: {err}")

    def rectangle(self) -> Rectangle:
        return Rectangle(self.re_min, self.re_max, self.im_min, self.im_max)

    def sim_config(self) -> SimConfig:
        return SimConfig(n_quad=self.n_quad, tol_ind=self.tol_ind,
                         tol_eps=self.tol_eps, r0=self.r0, seed=self.seed,
                         max_levels=self.max_levels, region_cap=self.region_cap,
                         workers=self.workers)

    def potential(self):
        return parse_potential(self.potential_text)


_SECTION_KEYS = {
    "domain": ("radius", "base_h", "level", "levels"),
    "search": ("re_min", "re_max", "im_min", "im_max", "truncation", "quad_order",
               "n_quad", "tol_ind", "tol_eps", "r0", "seed", "max_levels",
               "region_cap", "workers", "track", "oracle_n_max", "oracle_grid_step",
               "map_resolution"),
    "output": ("precision",),
}
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_KEYS = {name for name, tp in _FIELD_TYPES.items() if tp is int or tp == "int"}


def parse_config(text: str) -> RunConfig:
    section = None
    values = {}
    potential_lines = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if section != "potential" and (not stripped or stripped.startswith("#")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in ("domain", "potential", "search", "output"):
                raise ConfigError(f"unknown section [{section}]", line=line_no)
            continue
        if section is None:
            raise ConfigError("content before any [section] header", line=line_no)
        if section == "potential":
            potential_lines.append(line)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', found {stripped!r}", line=line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in _SECTION_KEYS[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line=line_no)
        try:
            values[key] = int(value) if key in _INT_KEYS else float(value)
        except ValueError:
            raise ConfigError(f"bad number {value!r} for {key}", line=line_no)
    if potential_lines:
        while potential_lines and not potential_lines[-1].strip():
            potential_lines.pop()
        values["potential_text"] = "\n".join(potential_lines) + "\n"
    config = RunConfig(**values)
    try:
        config.potential()
    except Exception as err:
        raise ConfigError(f"potential block: {err}")
    return config


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def render_config(config: RunConfig) -> str:
    """Canonical text form; parse_config(render_config(c)) == c."""
    lines = ["[domain]"]
    for key in _SECTION_KEYS["domain"]:
        lines.append(f"{key} = {getattr(config, key)!r}")
    lines.append("")
    lines.append("[potential]")
    lines.append(config.potential_text.rstrip("\n"))
    lines.append("")
    lines.append("[search]")
    for key in _SECTION_KEYS["search"]:
        lines.append(f"{key} = {getattr(config, key)!r}")
    lines.append("")
    lines.append("[output]")
    for key in _SECTION_KEYS["output"]:
        lines.append(f"{key} = {getattr(config, key)!r}")
    return "\n".join(lines) + "\n"


def with_overrides(config: RunConfig, **kwargs) -> RunConfig:
    updates = {k: v for k, v in kwargs.items() if v is not None}
    return replace(config, **updates) if updates else config
