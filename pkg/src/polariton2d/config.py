"""Scenario configuration: INI-style ``key = value`` sections with ``#`` comments.

Sections and keys (units in brackets):

``[scenario]``  id, system (landau | bosonic), output, seed, tasks (comma list)
``[cavity]``    nu_lc, nu_dp, rabi_lc, rabi_dp, gamma_lc, gamma_dp, gamma_matter,
                kappa_lc, kappa_dp [THz or dimensionless], nu_c [THz], drive_scale
``[landau]``    n_levels, b_field [T], m_eff, nu_np [THz], filling, u_e, u_d,
                nonparabolic, t2_base [ps], t2_phonon [ps], t1 [ps], e_lo [meV],
                phonon_window, dipole_reference, rho_exc_mode
``[pulses]``    peak_a, peak_b [kV/cm], center_freq [THz], envelope_fwhm [ps], cep,
                t_start, dt, n_samples [ps, ps, count], near_field_factor,
                file_a, file_b (measured transients; override synthesis)
``[scan]``      tau_start, tau_stop, tau_step [ps], t_stride
``[analysis]``  taper, pad, nu_t_max, threshold, catalog_order, cuts (``;`` list),
                stats_samples, noise_level, nu_split, pop_stride, snapshot_tau
``[hopfield]``  nu_lc, rabi_ratio, relative_to, nu_c_start, nu_c_stop, nu_c_step, nu_c_ref

Every value is type-checked against the schema; an unknown or malformed entry raises
:class:`ConfigError` naming ``section.key``.
"""

from __future__ import annotations

import configparser
import copy
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise ValueError("must be >= 0")
    return v


def _pos(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise ValueError("must be > 0")
    return v


def _choice(*options):
    def conv(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t

    return conv


def _csv(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _semi(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(";") if p.strip())


def _path(text: str) -> str:
    return text.strip()


TASKS = ("anticrossing", "linear", "dynamics", "scan", "spectrum", "catalog", "cuts", "stats", "switchoff")
SYSTEMS = ("landau", "bosonic")

SCHEMA = {
    "scenario": {
        "id": str,
        "system": _choice(*SYSTEMS),
        "output": _path,
        "seed": int,
        "tasks": _csv,
    },
    "cavity": {
        "nu_lc": _pos, "nu_dp": _pos, "rabi_lc": _nonneg, "rabi_dp": _nonneg,
        "gamma_lc": _nonneg, "gamma_dp": _nonneg, "gamma_matter": _nonneg,
        "kappa_lc": float, "kappa_dp": float, "nu_c": _nonneg, "drive_scale": _nonneg,
    },
    "landau": {
        "n_levels": _pos_int, "b_field": _pos, "m_eff": _pos, "nu_np": _pos, "filling": _nonneg,
        "u_e": _nonneg, "u_d": _nonneg, "nonparabolic": _bool, "t2_base": _pos,
        "t2_phonon": _pos, "t1": _nonneg, "e_lo": _pos, "phonon_window": _bool,
        "dipole_reference": _choice("collective", "fermi"),
        "rho_exc_mode": _choice("signed", "abs"),
    },
    "pulses": {
        "peak_a": _nonneg, "peak_b": _nonneg, "center_freq": _pos, "envelope_fwhm": _pos,
        "cep": float, "t_start": float, "dt": _pos, "n_samples": _pos_int,
        "near_field_factor": _nonneg, "file_a": _path, "file_b": _path,
    },
    "scan": {"tau_start": float, "tau_stop": float, "tau_step": _pos, "t_stride": _pos_int},
    "analysis": {
        "taper": _nonneg, "pad": _pos_int, "nu_t_max": _pos, "threshold": _nonneg,
        "catalog_order": _pos_int, "cuts": _semi, "stats_samples": _pos_int,
        "noise_level": _nonneg, "nu_split": _pos, "pop_stride": _pos_int, "snapshot_tau": float,
    },
    "hopfield": {
        "nu_lc": _pos, "rabi_ratio": _nonneg, "relative_to": _choice("cavity", "cyclotron"),
        "nu_c_start": _nonneg, "nu_c_stop": _nonneg, "nu_c_step": _pos, "nu_c_ref": _pos,
    },
}


@dataclass
class ScenarioConfig:
    """Resolved configuration: ``sections[section][key]`` holds typed values."""

    sections: dict = field(default_factory=dict)
    source: str | None = None

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    @property
    def scenario_id(self) -> str:
        return self.get("scenario", "id", "custom")

    @property
    def system(self) -> str:
        return self.get("scenario", "system", "landau")

    @property
    def tasks(self) -> tuple[str, ...]:
        return tuple(self.get("scenario", "tasks", ()))

    @property
    def seed(self) -> int:
        return int(self.get("scenario", "seed", 0))

    def merged(self, overrides: dict) -> "ScenarioConfig":
        out = copy.deepcopy(self.sections)
        for sec, values in overrides.items():
            out.setdefault(sec, {}).update(values)
        return ScenarioConfig(out, self.source)

    def to_ini(self) -> str:
        lines = []
        for sec in sorted(self.sections):
            lines.append(f"[{sec}]")
            for key in sorted(self.sections[sec]):
                lines.append(f"{key} = {format_value(self.sections[sec][key])}")
            lines.append("")
        return "\n".join(lines)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        sep = "; " if any("," in v or "=" in v for v in value) else ", "
        return sep.join(value)
    return str(value)


def convert(section: str, key: str, text) -> object:
    """Type-check one entry against the schema."""
    if section not in SCHEMA:
        raise ConfigError(f"unknown section [{section}]")
    conv = SCHEMA[section].get(key)
    if conv is None:
        raise ConfigError(f"{section}.{key}: unknown key")
    if not isinstance(text, str):
        text = format_value(text)
    try:
        return conv(text)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: invalid value {text!r} ({exc})") from None


def parse_config_text(text: str, source: str | None = None, base_dir: Path | None = None) -> ScenarioConfig:
    """Parse INI text, then overlay it on the preset named by ``scenario.id``."""
    from polariton2d.scenarios import preset

    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = {sec: dict(parser.items(sec)) for sec in parser.sections()}
    typed = {sec: {k: convert(sec, k, v) for k, v in values.items()} for sec, values in raw.items()}
    scenario_id = typed.get("scenario", {}).get("id", "custom")
    cfg = preset(scenario_id).merged(typed)
    cfg.source = source
    validate(cfg, base_dir)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path), path.parent)


def validate(cfg: ScenarioConfig, base_dir: Path | None = None) -> None:
    for task in cfg.tasks:
        if task not in TASKS:
            raise ConfigError(f"scenario.tasks: unknown task {task!r}")
    for key in ("file_a", "file_b"):
        name = cfg.get("pulses", key)
        if name:
            p = Path(name)
            if not p.is_absolute() and base_dir is not None:
                p = base_dir / p
            if not p.exists():
                raise ConfigError(f"pulses.{key}: file not found: {name}")
            cfg.sections["pulses"][key] = str(p)
    start, stop = cfg.get("scan", "tau_start"), cfg.get("scan", "tau_stop")
    if start is not None and stop is not None and stop < start:
        raise ConfigError("scan.tau_stop: must be >= scan.tau_start")
    hs, he = cfg.get("hopfield", "nu_c_start"), cfg.get("hopfield", "nu_c_stop")
    if hs is not None and he is not None and he <= hs:
        raise ConfigError("hopfield.nu_c_stop: must be > hopfield.nu_c_start")
    if "switchoff" in cfg.tasks and cfg.system != "landau":
        raise ConfigError("scenario.system: switch-off analysis needs the landau system")
