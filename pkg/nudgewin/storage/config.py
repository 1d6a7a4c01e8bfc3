"""Flat ``key = value`` run configuration.

Several pairs may share a line when separated by commas, ``#`` starts a
comment and ``preset = <name>`` loads a named preset that every explicit key
overrides, wherever it appears in the file.
"""
import hashlib
import logging
from dataclasses import dataclass
from typing import Optional

from ..core.assimilation import DEFAULT_C0, DEFAULT_C1, AssimilationConfig, InterpolantSpec
from ..core.dynamics import SolverParams, taylor_green_l2
from ..core.experiment import ExperimentConfig, RampSpec
from ..core.spectral import Grid
from ..core.theory import TheoryInputs
from ..errors import ConfigurationError

logger = logging.getLogger(__name__)

# file key -> (attribute, parser)
_INT, _FLOAT, _OPT_FLOAT, _STR = "int", "float", "optional float", "text"

FIELDS = {
    "dim": ("dim", _INT),
    "n": ("n", _INT),
    "L": ("length", _FLOAT),
    "nu": ("nu", _FLOAT),
    "forcing": ("forcing", _STR),
    "cfl": ("cfl", _FLOAT),
    "dt_fixed": ("dt_fixed", _OPT_FLOAT),
    "scheme": ("scheme", _STR),
    "mu": ("mu", _FLOAT),
    "kappa": ("kappa", _FLOAT),
    "tau": ("tau", _OPT_FLOAT),
    "interp.kind": ("interp_kind", _STR),
    "interp.m": ("interp_m", _INT),
    "interp.h": ("interp_h", _OPT_FLOAT),
    "interp.c0": ("interp_c0", _FLOAT),
    "interp.c1": ("interp_c1", _FLOAT),
    "feedback_form": ("feedback_form", _STR),
    "seed": ("seed", _INT),
    "k0": ("k0", _OPT_FLOAT),
    "T_ramp": ("T_ramp", _FLOAT),
    "T": ("T", _FLOAT),
    "tol": ("tol", _FLOAT),
    "absolute_c": ("absolute_c", _FLOAT),
    "out_dir": ("out_dir", _STR),
}

# keys whose combined values each validation stage checks
_STAGES = (
    ("grid", ("dim", "n", "L")),
    ("solver", ("nu", "forcing", "cfl", "dt_fixed", "kappa")),
    ("interpolant", ("interp.kind", "interp.m", "interp.h", "interp.c0", "interp.c1", "dim", "n", "L")),
    ("assimilation", ("scheme", "mu", "kappa", "tau", "feedback_form", "interp.kind")),
    ("experiment", ("seed", "k0", "T_ramp", "T", "tol")),
    ("theory", ("absolute_c",)),
)

_LARGE_3D = {
    "dim": 3, "n": 512, "nu": 3.58979e-4, "interp.kind": "modal", "interp.m": 100,
    "kappa": 1e-3, "dt_fixed": 1e-4, "mu": 5.0, "tau": 1e-3, "T_ramp": 15.0,
    "scheme": "nudge_window",
}

# desk cutoffs reach about a fifth of the dealiased radius n/3
PRESETS = {
    "paper-512": _LARGE_3D,
    "turb-512": _LARGE_3D,
    "desk-2d": {
        "dim": 2, "n": 256, "nu": 1e-3, "interp.kind": "modal", "interp.m": 108,
        "kappa": 1e-3, "dt_fixed": 1e-4, "mu": 5.0, "tau": 1e-3, "T_ramp": 1.0,
        "scheme": "nudge_window",
    },
    "desk-3d": {
        "dim": 3, "n": 64, "nu": 5e-3, "interp.kind": "modal", "interp.m": 16,
        "kappa": 1e-3, "dt_fixed": 1e-4, "mu": 5.0, "tau": 1e-3, "T_ramp": 1.0,
        "scheme": "nudge_window",
    },
}


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    n: int = 64
    length: float = 1.0
    nu: float = 1e-3
    forcing: str = "taylor_green"
    cfl: float = 0.5
    dt_fixed: Optional[float] = None
    scheme: str = "nudge_window"
    mu: float = 5.0
    kappa: float = 1e-3
    tau: Optional[float] = None
    interp_kind: str = "modal"
    interp_m: Optional[int] = 10
    interp_h: Optional[float] = None
    interp_c0: float = DEFAULT_C0
    interp_c1: float = DEFAULT_C1
    feedback_form: str = "frozen"
    seed: int = 0
    k0: Optional[float] = None
    T_ramp: float = 0.0
    T: float = 1.0
    tol: float = 1e-6
    absolute_c: float = 1.0
    out_dir: str = "."

    def grid(self):
        return Grid(self.dim, self.n, self.length)

    def solver(self):
        return SolverParams(
            nu=self.nu,
            forcing=self.forcing,
            cfl_number=self.cfl,
            dt_fixed=self.dt_fixed,
            dt_max=self.kappa / 10.0,
        )

    def interpolant(self):
        return InterpolantSpec(
            kind=self.interp_kind,
            m=self.interp_m if self.interp_kind == "modal" else None,
            h=self.interp_h,
            c0=self.interp_c0,
            c1=self.interp_c1,
        )

    def assimilation(self):
        return AssimilationConfig(
            interpolant=self.interpolant(),
            scheme=self.scheme,
            mu=self.mu,
            kappa=self.kappa,
            tau=self.tau,
            feedback_form=self.feedback_form,
        )

    def to_experiment(self):
        return ExperimentConfig(
            grid=self.grid(),
            solver=self.solver(),
            assimilation=self.assimilation(),
            ramp=RampSpec(seed=self.seed, k0=self.k0, T_ramp=self.T_ramp),
            T=self.T,
            tol=self.tol,
            out_dir=self.out_dir,
        )

    def theory_inputs(self):
        f_l2 = 0.0 if self.forcing == "none" else taylor_green_l2(self.dim, self.length)
        assimilation = self.assimilation()
        return TheoryInputs(
            nu=self.nu,
            lambda1=self.grid().lambda1,
            f_l2=f_l2,
            mu=self.mu,
            kappa=self.kappa,
            tau=assimilation.tau,
            interpolant=assimilation.interpolant,
            dim=self.dim,
            absolute_c=self.absolute_c,
        )

    def validate(self, lines=None):
        """Build every derived object; errors carry the line of the last key involved."""
        lines = lines or {}
        builders = {
            "grid": self.grid,
            "solver": self.solver,
            "interpolant": lambda: self.interpolant().validate_for(self.grid()),
            "assimilation": self.assimilation,
            "experiment": self.to_experiment,
            "theory": self._check_absolute_c,
        }
        for stage, keys in _STAGES:
            try:
                builders[stage]()
            except ConfigurationError as error:
                if error.line is not None:
                    raise
                found = [lines[key] for key in keys if key in lines]
                raise ConfigurationError(str(error), line=max(found) if found else None) from error
        return self

    def _check_absolute_c(self):
        if not self.absolute_c > 0:
            raise ConfigurationError(f"Absolute constant must be positive, got {self.absolute_c}.")

    def to_dict(self):
        return {key: getattr(self, attr) for key, (attr, _) in FIELDS.items()}

    @classmethod
    def from_dict(cls, config_data):
        unknown = set(config_data) - set(FIELDS)
        if unknown:
            raise ConfigurationError(f"Unknown configuration key(s): {', '.join(sorted(unknown))}.")
        values = {FIELDS[key][0]: value for key, value in config_data.items()}
        return cls(**values).validate()

    def to_text(self, exclude=()):
        lines = []
        for key, value in self.to_dict().items():
            if key in exclude:
                continue
            text = "none" if value is None else (repr(value) if isinstance(value, float) else str(value))
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    def config_hash(self):
        """SHA-256 of the echo text, out_dir excluded."""
        return hashlib.sha256(self.to_text(exclude=("out_dir",)).encode("utf-8")).hexdigest()


def _parse_value(key, text, line):
    kind = FIELDS[key][1]
    if kind == _STR:
        if not text:
            raise ConfigurationError(f"Empty value for '{key}'.", line=line)
        return text
    if kind == _OPT_FLOAT and text.lower() == "none":
        return None
    try:
        if kind == _INT:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigurationError(f"Malformed {kind} for '{key}': {text!r}.", line=line) from None


def _pairs(text):
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        for item in content.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise ConfigurationError(f"Expected 'key = value', got {item!r}.", line=number)
            key, value = item.split("=", 1)
            yield number, key.strip(), value.strip()


def parse_config(text):
    """Parse and validate a run configuration; the first error names its line."""
    explicit = {}
    lines = {}
    preset = None
    for number, key, value in _pairs(text):
        if key == "preset":
            if value not in PRESETS:
                raise ConfigurationError(
                    f"Unknown preset '{value}', expected one of {', '.join(PRESETS)}.", line=number
                )
            preset = value
            continue
        if key not in FIELDS:
            raise ConfigurationError(f"Unknown key '{key}'.", line=number)
        if key in explicit:
            raise ConfigurationError(f"Duplicate key '{key}'.", line=number)
        explicit[key] = _parse_value(key, value, number)
        lines[key] = number

    values = dict(PRESETS[preset]) if preset else {}
    values.update(explicit)
    config = RunConfig(**{FIELDS[key][0]: value for key, value in values.items()})
    logger.debug("Parsed configuration (preset=%s): %s", preset, config)
    return config.validate(lines)


def load_config(path):
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read())
