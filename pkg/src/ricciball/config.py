"""Flat-keyed INI run configuration: parse, canonical serialization, hashing."""
import configparser
import hashlib
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .background import BackgroundModel
from .errors import ConfigError
from .grid import RadialGrid
from .monitors import MonitorSettings
from .rho import RhoSpec, ValidatorSettings
from .solver import RunSettings, SchemeConfig

_DEFAULTS = {
    "model": {"dimension": "3", "m": "0.5", "r0": "1.0"},
    "grid": {"n_points": "101"},
    "rho": {"family": "zero", "amplitude": "0.0", "order": "2",
            "t_ramp": "1.0", "table_times": "", "table_values": ""},
    "scheme": {"name": "explicit-rk4", "cfl_factor": "0.2", "dt_max": "0.01",
               "dt_min": "1e-10", "newton_tol": "1e-10",
               "newton_max_iter": "20", "dissipation": "auto",
               "formulation": "ab"},
    "time": {"t_end": "1.0", "snapshot_times": "", "snapshot_cadence": "0",
             "record_cadence": "0.05"},
    "monitors": {"enabled": "default", "warmup": "0.05", "tol_factor": "10.0",
                 "r_compact": "0.5", "window": "2.0",
                 "c_end_threshold": "0.01", "k_dev_threshold": "0.02",
                 "plateau_rel": "1e-3", "identity_factor": "400.0",
                 "hard_fail": "true"},
    "validator": {"target": "auto", "t_max": "auto", "n_samples": "2000",
                  "sigma": "0.1", "sigma_window": "1e-3",
                  "tail_epsilon": "1e-3", "tail_t": "1.0", "y0": "auto",
                  "resolution": "1e-9"},
    "outputs": {"directory": "out", "formats": "csv,snapshots,report,summary"},
}

_SECTION_ORDER = ("model", "grid", "rho", "scheme", "time", "monitors",
                  "validator", "outputs")


def _parse_floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(tok) for tok in text.replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; round-trips losslessly through INI text."""

    values: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, overrides: dict | None = None) -> "RunConfig":
        values = {s: dict(kv) for s, kv in _DEFAULTS.items()}
        for section, kv in (overrides or {}).items():
            if section not in values:
                raise ConfigError(f"unknown config section [{section}]")
            for key, val in kv.items():
                if key not in values[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                values[section][key] = str(val)
        cfg = cls(values=values)
        cfg.validate()
        return cfg

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse configuration: {exc}") from exc
        overrides = {s: dict(parser.items(s)) for s in parser.sections()
                     if s != "sweep"}
        return cls.from_dict(overrides)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_ini(fh.read())

    def get(self, section: str, key: str) -> str:
        return self.values[section][key]

    def getfloat(self, section: str, key: str) -> float:
        try:
            return float(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"{section}.{key} must be a number") from exc

    def getint(self, section: str, key: str) -> int:
        try:
            return int(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"{section}.{key} must be an integer") from exc

    def getbool(self, section: str, key: str) -> bool:
        val = self.get(section, key).lower()
        if val in ("true", "1", "yes"):
            return True
        if val in ("false", "0", "no"):
            return False
        raise ConfigError(f"{section}.{key} must be a boolean")

    def with_overrides(self, overrides: dict) -> "RunConfig":
        merged = {s: dict(kv) for s, kv in self.values.items()}
        for section, kv in overrides.items():
            for key, val in kv.items():
                merged[section][key] = str(val)
        return RunConfig.from_dict(merged)

    # -- canonical text and hash ----------------------------------------------

    def to_ini(self) -> str:
        out = io.StringIO()
        for section in _SECTION_ORDER:
            out.write(f"[{section}]\n")
            for key in sorted(self.values[section]):
                out.write(f"{key} = {self.values[section][key]}\n")
            out.write("\n")
        return out.getvalue()

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:12]

    # -- domain objects ---------------------------------------------------------

    def validate(self) -> None:
        self.model()
        self.grid()
        self.rho_spec()
        self.scheme()
        self.run_settings()
        if self.formulation() == "conformal" and self.getint("model", "dimension") != 2:
            raise ConfigError("conformal formulation requires dimension 2")

    def model(self) -> BackgroundModel:
        return BackgroundModel(n=self.getint("model", "dimension"),
                               m=self.getfloat("model", "m"),
                               r0=self.getfloat("model", "r0"))

    def grid(self) -> RadialGrid:
        return RadialGrid.make(self.getfloat("model", "r0"),
                               self.getint("grid", "n_points"))

    def rho_spec(self) -> RhoSpec:
        family = self.get("rho", "family")
        times = _parse_floats(self.get("rho", "table_times"))
        vals = _parse_floats(self.get("rho", "table_values"))
        return RhoSpec(
            family=family,
            amplitude=self.getfloat("rho", "amplitude"),
            order=self.getint("rho", "order"),
            t_ramp=self.getfloat("rho", "t_ramp"),
            table_times=np.asarray(times) if times else None,
            table_values=np.asarray(vals) if vals else None)

    def scheme(self) -> SchemeConfig:
        diss = self.get("scheme", "dissipation")
        return SchemeConfig(
            scheme=self.get("scheme", "name"),
            cfl_factor=self.getfloat("scheme", "cfl_factor"),
            dt_max=self.getfloat("scheme", "dt_max"),
            dt_min=self.getfloat("scheme", "dt_min"),
            newton_tol=self.getfloat("scheme", "newton_tol"),
            newton_max_iter=self.getint("scheme", "newton_max_iter"),
            dissipation=None if diss == "auto" else float(diss))

    def formulation(self) -> str:
        form = self.get("scheme", "formulation")
        if form not in ("ab", "conformal"):
            raise ConfigError("formulation must be 'ab' or 'conformal'")
        return form

    def run_settings(self) -> RunSettings:
        t_end = self.getfloat("time", "t_end")
        if t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        times = _parse_floats(self.get("time", "snapshot_times"))
        cadence = self.getfloat("time", "snapshot_cadence")
        if not times and cadence > 0.0:
            k = int(round(t_end / cadence))
            times = tuple(i * cadence for i in range(1, k + 1))
        return RunSettings(
            t_end=t_end, snapshot_times=tuple(times),
            record_cadence=self.getfloat("time", "record_cadence"),
            r_compact=self.getfloat("monitors", "r_compact"))

    def monitor_settings(self) -> MonitorSettings:
        window = self.get("monitors", "window")
        return MonitorSettings(
            warmup=self.getfloat("monitors", "warmup"),
            tol_factor=self.getfloat("monitors", "tol_factor"),
            r_compact=self.getfloat("monitors", "r_compact"),
            window=float(window) if window != "auto" else 2.0,
            c_end_threshold=self.getfloat("monitors", "c_end_threshold"),
            k_dev_threshold=self.getfloat("monitors", "k_dev_threshold"),
            plateau_rel=self.getfloat("monitors", "plateau_rel"),
            identity_factor=self.getfloat("monitors", "identity_factor"))

    def enabled_checks(self) -> tuple | None:
        raw = self.get("monitors", "enabled")
        if raw in ("default", "all", ""):
            return None
        return tuple(tok.strip() for tok in raw.split(",") if tok.strip())

    def validator_target(self) -> str:
        target = self.get("validator", "target")
        if target == "auto":
            return "thm-1.2" if self.getint("model", "dimension") == 2 else "thm-1.1"
        return target

    def validator_settings(self) -> ValidatorSettings:
        y0 = self.get("validator", "y0")
        return ValidatorSettings(
            sigma=self.getfloat("validator", "sigma"),
            sigma_window=self.getfloat("validator", "sigma_window"),
            tail_epsilon=self.getfloat("validator", "tail_epsilon"),
            tail_T=self.getfloat("validator", "tail_t"),
            y0=None if y0 == "auto" else float(y0),
            resolution=self.getfloat("validator", "resolution"))

    def validator_horizon(self) -> float:
        raw = self.get("validator", "t_max")
        if raw == "auto":
            return max(self.getfloat("time", "t_end"), 1.0)
        return float(raw)
