# depthfilter/config.py
# FilterConfig (validated dataclass), environment defaults and scenario files.
#
# Precedence: explicit arguments / CLI flags > DEPTHFILTER_* environment (a .env
# file is loaded with python-dotenv) > dataclass defaults.

from __future__ import annotations
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

import yaml
from dotenv import load_dotenv

from .errors import ConfigError
from .utils.log import get_logger

LOG = get_logger(__name__)

METHODS = ("hs", "gy")
STAGES = ("univariate", "bivariate", "pvariate")
PIPELINE_FAMILIES = ("gaussian", "t5", "empirical")
_STAGE_ALIASES = {
    "u": "univariate", "univariate": "univariate",
    "b": "bivariate", "bivariate": "bivariate",
    "p": "pvariate", "pvariate": "pvariate",
}


def parse_stages(spec: str | Iterable[str]) -> Tuple[str, ...]:
    """'u,b,p' (or full names) -> stage names in dimension order."""
    items = [s.strip() for s in spec.split(",")] if isinstance(spec, str) else [str(s).strip() for s in spec]
    picked = set()
    for s in items:
        if not s:
            continue
        name = _STAGE_ALIASES.get(s.lower())
        if name is None:
            raise ConfigError(f"unknown stage {s!r}; expected any of u, b, p")
        picked.add(name)
    if not picked:
        raise ConfigError("at least one stage is required")
    return tuple(s for s in STAGES if s in picked)


def _prob(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ConfigError(f"{name} must be in (0, 1), got {value}")


@dataclass(frozen=True)
class FilterConfig:
    method: str = "hs"
    stages: Tuple[str, ...] = STAGES
    beta: float = 0.99
    alpha: float = 0.95
    delta: float = 0.1
    binom_q: float = 0.99
    n_directions: int = 5000
    ref_family: str = "gaussian"
    seed: int = 0
    em_tol: float = 1e-8
    em_max_iter: int = 500
    min_pair_rows: int = 10
    max_tuples: int = 10_000
    ref_sample_size: int = 100_000
    mad_scale: float = 1.4826
    threads: int = 1
    estimator: str = "em-gaussian"

    def __post_init__(self) -> None:
        method = str(self.method).lower()
        if method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        object.__setattr__(self, "method", method)
        object.__setattr__(self, "stages", parse_stages(self.stages))
        for name in ("beta", "alpha", "delta", "binom_q"):
            _prob(name, float(getattr(self, name)))
        if self.n_directions < 1:
            raise ConfigError(f"n_directions must be >= 1, got {self.n_directions}")
        if self.ref_family not in PIPELINE_FAMILIES:
            hint = " (skew-normal parameters cannot be estimated by the pipeline)" if self.ref_family == "skewnormal" else ""
            raise ConfigError(f"ref_family must be one of {PIPELINE_FAMILIES}, got {self.ref_family!r}{hint}")
        if self.em_tol <= 0 or self.em_max_iter < 1:
            raise ConfigError("em_tol must be > 0 and em_max_iter >= 1")
        if self.min_pair_rows < 1 or self.max_tuples < 1:
            raise ConfigError("min_pair_rows and max_tuples must be >= 1")
        if self.ref_sample_size < 1000:
            raise ConfigError(f"ref_sample_size must be >= 1000, got {self.ref_sample_size}")
        if self.mad_scale <= 0:
            raise ConfigError(f"mad_scale must be > 0, got {self.mad_scale}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def label(self) -> str:
        """Method name in the usual notation, e.g. HS-UBPF or GY-UF."""
        letters = "".join(s[0].upper() for s in self.stages)
        return f"{self.method.upper()}-{letters}F"

    def with_overrides(self, **kw: Any) -> "FilterConfig":
        known = {f.name for f in fields(self)}
        unknown = set(kw) - known
        if unknown:
            raise ConfigError(f"unknown FilterConfig fields: {sorted(unknown)}")
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["stages"] = list(self.stages)
        return out

    @classmethod
    def from_env(cls, env_file: Optional[str | Path] = None, **overrides: Any) -> "FilterConfig":
        """Defaults from DEPTHFILTER_* variables, then explicit overrides."""
        load_dotenv(dotenv_path=env_file)
        env: Dict[str, Any] = {}
        casts = {
            "method": ("DEPTHFILTER_METHOD", str),
            "stages": ("DEPTHFILTER_STAGES", str),
            "beta": ("DEPTHFILTER_BETA", float),
            "alpha": ("DEPTHFILTER_ALPHA", float),
            "delta": ("DEPTHFILTER_DELTA", float),
            "binom_q": ("DEPTHFILTER_BINOM_Q", float),
            "n_directions": ("DEPTHFILTER_DIRECTIONS", int),
            "ref_family": ("DEPTHFILTER_REF", str),
            "seed": ("DEPTHFILTER_SEED", int),
            "threads": ("DEPTHFILTER_THREADS", int),
            "ref_sample_size": ("DEPTHFILTER_REF_SAMPLE_SIZE", int),
        }
        for field_name, (var, cast) in casts.items():
            raw = os.getenv(var)
            if raw is None or not raw.strip():
                continue
            try:
                env[field_name] = cast(raw.strip())
            except ValueError:
                raise ConfigError(f"{var}={raw!r} is not a valid {cast.__name__}") from None
        env.update({k: v for k, v in overrides.items() if v is not None})
        return cls().with_overrides(**env)


def na_token_from_env(default: str = "NA") -> str:
    return os.getenv("DEPTHFILTER_NA_TOKEN", default)


# ---------------------------- Scenario files ----------------------------

def load_scenario_file(path: str | Path) -> Dict[str, Any]:
    """Read a YAML (or JSON) scenario file into a plain dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file {path} does not exist")
    with open(path, "r", encoding="utf-8") as f:
        try:
            y = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path} is not valid YAML/JSON: {e}") from None
    if not isinstance(y, dict):
        raise ConfigError(f"{path} must contain a mapping at top level")
    LOG.debug("Loaded scenario file %s (keys=%s)", path, sorted(y))
    return y


PRESET_DIR = Path(__file__).resolve().parent.parent / "config" / "scenarios"


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.yml"
    if not path.exists():
        available = sorted(p.stem for p in PRESET_DIR.glob("*.yml")) if PRESET_DIR.exists() else []
        raise ConfigError(f"unknown preset {name!r}; available: {available}")
    return path
