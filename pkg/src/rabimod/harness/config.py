"""Run configuration: defaults, sectioned config files, CLI overrides.

Precedence (last wins): scenario preset -> config file -> CLI flags.
The config file is INI-style ``section key = value``; unknown sections or
keys are rejected rather than ignored.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass

from ..dynamics import InitialState
from ..errors import DomainError
from ..model import ModelParams
from ..opensys import DissipationRates

AUTO_FOCK_WEAK = 15
AUTO_FOCK_STRONG = 30
STRONG_COUPLING_EDGE = 0.2  # coupling at/above this gets the deeper default cutoff
ATOL_OVER_RTOL = 1e-2


@dataclass(frozen=True)
class RunSettings:
    """Fully resolved settings for one harness invocation.

    Frequencies are in units of the qubit frequency (fixed at 1); ``delta``
    is qubit minus cavity frequency.  ``n_fock = None`` selects the default
    cutoff for the coupling strength; ``atol = None`` derives the absolute
    tolerance from ``rtol``; ``t_max``/``horizon = None`` defer to the
    scenario's own default.
    """

    scenario: str = "custom"
    # model
    delta: float = 0.0
    coupling: float = 0.05
    mod_amplitude: float = 0.0
    mod_freq: float = 0.0
    n_fock: int | None = None
    n_max: int = 40
    # initial state
    init: str = "g0"  # g0 | e0 | coherent
    alpha: float = 0.1
    # integration
    rtol: float = 1e-8
    atol: float | None = None
    # time grid
    t_max: float | None = None
    samples: int = 1000
    # sweep grid
    nu_start: float = 0.3
    nu_stop: float = 2.5
    nu_step: float = 0.01
    # dissipation
    gamma_qubit: float = 0.02
    gamma_cavity: float = 0.02
    horizon: float | None = None
    # comparisons / observables
    effective: str = "enhanced"  # enhanced | suppressed
    channels: str = "g0,e1"
    # execution
    jobs: int = 1
    out_dir: str = "rabimod-out"

    def __post_init__(self):
        if self.init not in ("g0", "e0", "coherent"):
            raise DomainError(f"init must be g0, e0 or coherent, got {self.init!r}")
        if self.effective not in ("enhanced", "suppressed"):
            raise DomainError(
                f"effective must be enhanced or suppressed, got {self.effective!r}"
            )
        if self.jobs < 1:
            raise DomainError(f"jobs must be >= 1, got {self.jobs}")
        if self.samples < 2:
            raise DomainError(f"samples must be >= 2, got {self.samples}")
        if not (math.isfinite(self.rtol) and self.rtol > 0.0):
            raise DomainError(f"rtol must be positive, got {self.rtol}")

    @property
    def resolved_n_fock(self) -> int:
        if self.n_fock is not None:
            return self.n_fock
        return (
            AUTO_FOCK_STRONG
            if self.coupling >= STRONG_COUPLING_EDGE
            else AUTO_FOCK_WEAK
        )

    @property
    def resolved_atol(self) -> float:
        return self.atol if self.atol is not None else self.rtol * ATOL_OVER_RTOL

    def params(self, **overrides) -> ModelParams:
        base = dict(
            qubit_freq=1.0,
            cavity_freq=1.0 - self.delta,
            coupling=self.coupling,
            mod_amplitude=self.mod_amplitude,
            mod_freq=self.mod_freq,
            n_fock=self.resolved_n_fock,
        )
        base.update(overrides)
        return ModelParams(**base)

    def rates(self) -> DissipationRates:
        return DissipationRates(qubit=self.gamma_qubit, cavity=self.gamma_cavity)

    def initial_state(self) -> InitialState:
        if self.init == "g0":
            return InitialState.ground()
        if self.init == "e0":
            return InitialState.excited()
        return InitialState.superposition_coherent(self.alpha)

    def nu_grid(self):
        import numpy as np

        if self.nu_step <= 0.0 or self.nu_stop < self.nu_start:
            raise DomainError("need nu_step > 0 and nu_stop >= nu_start")
        n = int(math.floor((self.nu_stop - self.nu_start) / self.nu_step + 1e-9)) + 1
        return self.nu_start + self.nu_step * np.arange(n)


# (section, key) -> (field name, caster).  configparser lower-cases keys.
def _to_int(s: str) -> int:
    return int(s)


def _to_float(s: str) -> float:
    return float(s)


def _to_str(s: str) -> str:
    return s


_FILE_KEYS = {
    ("model", "delta"): ("delta", _to_float),
    ("model", "coupling"): ("coupling", _to_float),
    ("model", "mod_amplitude"): ("mod_amplitude", _to_float),
    ("model", "mod_freq"): ("mod_freq", _to_float),
    ("model", "n_fock"): ("n_fock", _to_int),
    ("model", "n_max"): ("n_max", _to_int),
    ("state", "init"): ("init", _to_str),
    ("state", "alpha"): ("alpha", _to_float),
    ("run", "rtol"): ("rtol", _to_float),
    ("run", "atol"): ("atol", _to_float),
    ("run", "effective"): ("effective", _to_str),
    ("run", "channels"): ("channels", _to_str),
    ("run", "jobs"): ("jobs", _to_int),
    ("run", "out"): ("out_dir", _to_str),
    ("grid", "t_max"): ("t_max", _to_float),
    ("grid", "samples"): ("samples", _to_int),
    ("grid", "nu_start"): ("nu_start", _to_float),
    ("grid", "nu_stop"): ("nu_stop", _to_float),
    ("grid", "nu_step"): ("nu_step", _to_float),
    ("grid", "horizon"): ("horizon", _to_float),
    ("rates", "qubit"): ("gamma_qubit", _to_float),
    ("rates", "cavity"): ("gamma_cavity", _to_float),
}


def load_config_file(path: str) -> dict:
    """Parse a sectioned key=value file into a {field: value} override dict."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise DomainError(f"config file not found: {path}")
    overrides = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            entry = _FILE_KEYS.get((section, key))
            if entry is None:
                raise DomainError(f"unknown config entry [{section}] {key}")
            name, cast = entry
            try:
                overrides[name] = cast(raw)
            except ValueError as exc:
                raise DomainError(
                    f"bad value for [{section}] {key}: {raw!r}"
                ) from exc
    return overrides


def resolve_settings(preset: dict, file_overrides: dict, cli_overrides: dict) -> RunSettings:
    """Merge the three layers (preset < file < CLI) into RunSettings."""
    merged = dict(preset)
    merged.update(file_overrides)
    merged.update({k: v for k, v in cli_overrides.items() if v is not None})
    valid = {f.name for f in dataclasses.fields(RunSettings)}
    unknown = set(merged) - valid
    if unknown:
        raise DomainError(f"unknown settings: {sorted(unknown)}")
    return RunSettings(**merged)
