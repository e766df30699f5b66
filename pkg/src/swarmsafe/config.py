"""Experiment configuration: a TOML file mapping 1:1 onto the scenario and
simulation dataclasses, with strict unknown-key checking and a semantic
round-trip (parse -> serialize -> parse is identical).

Top-level keys: `kind` ("coverage" | "shepherding"), `filter`, `runs`,
`base_seed`, `layout_mode` ("per-run" | "fixed"), `output_dir`, plus the
`[sim]` and `[scenario]` tables whose keys are the corresponding dataclass
fields (including nested tables such as `[scenario.obstacles]`).
"""

import dataclasses
from dataclasses import dataclass, field, replace
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import InvalidInputError
from .scenarios import CoverageScenario, ShepherdingScenario
from .sim import SimConfig

SCHEMA_VERSION = 1

_SCENARIO_KINDS = {
    "coverage": CoverageScenario,
    "shepherding": ShepherdingScenario,
}
_LAYOUT_MODES = ("per-run", "fixed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one experiment invocation."""

    kind: str = "coverage"
    scenario: object = None
    sim: SimConfig = field(default_factory=SimConfig)
    filter_enabled: bool = True
    runs: int = 1
    base_seed: int = 0
    layout_mode: str = "per-run"
    output_dir: str = "swarmsafe_out"

    def __post_init__(self):
        if self.kind not in _SCENARIO_KINDS:
            raise InvalidInputError(f"unknown scenario kind {self.kind!r}")
        if self.scenario is None:
            object.__setattr__(self, "scenario", _SCENARIO_KINDS[self.kind]())
        if not isinstance(self.scenario, _SCENARIO_KINDS[self.kind]):
            raise InvalidInputError(
                f"scenario object does not match kind {self.kind!r}"
            )
        if self.runs < 1:
            raise InvalidInputError("runs must be >= 1")
        if self.layout_mode not in _LAYOUT_MODES:
            raise InvalidInputError(
                f"layout_mode must be one of {_LAYOUT_MODES}, got {self.layout_mode!r}"
            )


def _apply_table(dc, table, path):
    """Replace dataclass fields from a TOML table, recursing into tables."""
    names = {f.name: f for f in dataclasses.fields(dc)}
    updates = {}
    for key, value in table.items():
        if key not in names:
            raise InvalidInputError(f"unknown config key {path}{key!r}")
        current = getattr(dc, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            updates[key] = _apply_table(current, value, f"{path}{key}.")
        elif isinstance(value, list):
            updates[key] = tuple(value)
        else:
            updates[key] = value
    try:
        return replace(dc, **updates)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"invalid value under {path!r}: {exc}") from exc


def parse_config(data, source="<config>"):
    """Build an ExperimentConfig from a parsed TOML mapping."""
    data = dict(data)
    schema = data.pop("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise InvalidInputError(
            f"{source}: unsupported schema version {schema}, expected {SCHEMA_VERSION}"
        )
    kind = data.pop("kind", "coverage")
    if kind not in _SCENARIO_KINDS:
        raise InvalidInputError(f"{source}: unknown scenario kind {kind!r}")
    scenario = _apply_table(
        _SCENARIO_KINDS[kind](), data.pop("scenario", {}), "scenario."
    )
    sim = _apply_table(SimConfig(), data.pop("sim", {}), "sim.")
    top = {
        "filter": "filter_enabled",
        "runs": "runs",
        "base_seed": "base_seed",
        "layout_mode": "layout_mode",
        "output_dir": "output_dir",
    }
    kwargs = {}
    for key, value in data.items():
        if key not in top:
            raise InvalidInputError(f"{source}: unknown config key {key!r}")
        kwargs[top[key]] = value
    return ExperimentConfig(kind=kind, scenario=scenario, sim=sim, **kwargs)


def load_config(path):
    """Parse a TOML config file; syntax errors carry line information."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidInputError(f"{path}: {exc}") from exc
    return parse_config(data, source=str(path))


def load_preset(name):
    """Load one of the packaged preset configurations by bare name."""
    ref = resources.files("swarmsafe.presets").joinpath(f"{name}.toml")
    try:
        data = tomllib.loads(ref.read_text())
    except FileNotFoundError:
        raise InvalidInputError(f"unknown preset {name!r}") from None
    return parse_config(data, source=f"preset:{name}")


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return repr(int(v))
    if isinstance(v, float):  # also accepts numpy floats
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise InvalidInputError(f"cannot serialize config value {v!r}")


def _emit_table(name, dc, lines):
    nested = []
    if name:
        lines.append(f"[{name}]")
    for f in dataclasses.fields(dc):
        value = getattr(dc, f.name)
        if dataclasses.is_dataclass(value):
            nested.append((f"{name}.{f.name}" if name else f.name, value))
        elif value is None:
            # TOML has no null; absent key means "keep the dataclass default"
            continue
        else:
            lines.append(f"{f.name} = {_toml_value(value)}")
    lines.append("")
    for sub_name, sub in nested:
        _emit_table(sub_name, sub, lines)


def dump_config(cfg):
    """Serialize a config to TOML text; parse(dump(c)) equals c."""
    lines = [
        f"schema = {SCHEMA_VERSION}",
        f"kind = {_toml_value(cfg.kind)}",
        f"filter = {_toml_value(cfg.filter_enabled)}",
        f"runs = {_toml_value(cfg.runs)}",
        f"base_seed = {_toml_value(cfg.base_seed)}",
        f"layout_mode = {_toml_value(cfg.layout_mode)}",
        f"output_dir = {_toml_value(cfg.output_dir)}",
        "",
    ]
    _emit_table("sim", cfg.sim, lines)
    _emit_table("scenario", cfg.scenario, lines)
    return "\n".join(lines).rstrip() + "\n"


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
