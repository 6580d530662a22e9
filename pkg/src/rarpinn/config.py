"""Experiment configuration: INI sections, named presets and typed builders.

Settings live in a two-level mapping ``section -> key -> text``. Layers are
applied in order: built-in defaults, the named preset, the config file,
then command-line flags. The fully expanded mapping is what a run echoes
into its manifest.
"""

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError
from .net import NetworkShape
from .optim import AdamConfig, LBFGSConfig, OptimizerConfig
from .oracle import GridSpec, OneSolitonSpec, TwoSolitonSpec, as_solution
from .physics import CGNLSCoefficients, LambdaVector
from .sampling import Domain, RARConfig

MODES = ("generate", "train-forward", "train-inverse", "evaluate")
ORACLES = ("one-soliton", "two-soliton", "none")
BOUNDARY_MODES = ("periodic", "supervised", "none")

DEFAULTS: dict[str, dict[str, str]] = {
    "experiment": {"mode": "train-forward", "preset": "", "seed": "1234"},
    "oracle": {
        "kind": "one-soliton",
        "a": "1", "b": "2", "k": "1.5+1j",
        "k1": "1+1j", "k2": "2-1j",
        "xi11": "1", "xi12": "1", "xi21": "1", "xi22": "1",
        "alpha": "1", "beta": "1", "gamma": "1",
    },
    "domain": {"x_lo": "-10", "x_hi": "10", "t_lo": "-2", "t_hi": "2"},
    "grid": {"nx": "300", "nt": "201"},
    "network": {"hidden_layers": "6", "hidden_width": "32", "normalize_inputs": "true"},
    "sampling": {"n0": "50", "nb": "50", "nf": "4000", "boundary_mode": "periodic", "tpinn": "false", "tpinn_nf": ""},
    "rar": {
        "enabled": "true", "m": "5", "epsilon0": "0.01", "max_rounds": "2",
        "candidate_pool": "10000", "refit_iterations": "1000",
    },
    "adam": {"lr": "0.001", "beta1": "0.9", "beta2": "0.999", "eps": "1e-08", "iterations": "10000"},
    "lbfgs": {"memory": "50", "gtol": "1e-09", "ftol": "2.220446049250313e-16", "max_iter": "50000"},
    "inverse": {
        "n_u": "5000", "noise_level": "0", "lambda_init": "0,0,0,0", "truth": "1,2,1,2",
        "m": "5", "epsilon0": "0.15", "max_rounds": "2",
    },
    "paths": {"dataset": "", "prediction": "", "params": ""},
}

_TWO_SOLITON = {
    "kind": "two-soliton", "k1": "1+1j", "k2": "2-1j",
    "xi11": "1", "xi12": "1", "xi21": "1", "xi22": "1",
    "alpha": "2", "beta": "2", "gamma": "0.5+0.5j",
}

PRESETS: dict[str, dict[str, dict[str, str]]] = {
    "one-soliton": {
        "oracle": {"kind": "one-soliton", "a": "1", "b": "2", "k": "1.5+1j", "alpha": "1", "beta": "1", "gamma": "1"},
        "domain": {"x_lo": "-10", "x_hi": "10", "t_lo": "-2", "t_hi": "2"},
        "grid": {"nx": "300", "nt": "201"},
        "sampling": {"n0": "50", "nb": "50", "nf": "4000"},
        "rar": {"m": "5", "epsilon0": "0.01", "max_rounds": "2"},
        "adam": {"iterations": "10000"},
    },
    "two-soliton-elastic": {
        "oracle": dict(_TWO_SOLITON),
        "domain": {"x_lo": "-7", "x_hi": "7", "t_lo": "-1", "t_hi": "1"},
        "grid": {"nx": "300", "nt": "201"},
        "sampling": {"n0": "100", "nb": "100", "nf": "4000"},
        "rar": {"m": "3", "epsilon0": "0.055", "max_rounds": "5"},
        "adam": {"iterations": "10000"},
    },
    "two-soliton-inelastic": {
        "oracle": dict(_TWO_SOLITON, xi21="(39+80j)/89"),
        "domain": {"x_lo": "-4", "x_hi": "4", "t_lo": "-0.3", "t_hi": "0.3"},
        "grid": {"nx": "400", "nt": "301"},
        "sampling": {"n0": "150", "nb": "150", "nf": "15000"},
        "rar": {"m": "10", "epsilon0": "0.13", "max_rounds": "10"},
        "adam": {"iterations": "20000"},
    },
    "three-soliton-ingest": {
        "oracle": {"kind": "none", "alpha": "2", "beta": "2", "gamma": "0.5+0.5j"},
        "domain": {"x_lo": "-6", "x_hi": "6", "t_lo": "-0.8", "t_hi": "0.8"},
        "grid": {"nx": "400", "nt": "301"},
        "sampling": {"n0": "120", "nb": "100", "nf": "6000"},
        "rar": {"m": "3", "epsilon0": "0.07", "max_rounds": "6"},
        "adam": {"iterations": "20000"},
    },
}

Settings = dict[str, dict[str, str]]


def expand(preset: str | None = None, file: str | Path | None = None, overrides: Settings | None = None) -> Settings:
    """Merge defaults, preset, INI file and overrides into one mapping.

    A ``preset`` key in the file's ``[experiment]`` section is honoured when
    no preset argument is given.
    """
    settings = {s: dict(kv) for s, kv in DEFAULTS.items()}
    parsed: Settings = {}
    if file is not None:
        parsed = read_ini(file)
    name = preset or parsed.get("experiment", {}).get("preset") or ""
    if name:
        if name not in PRESETS:
            raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        _merge(settings, PRESETS[name])
        settings["experiment"]["preset"] = name
    _merge(settings, parsed, source=str(file) if file else None)
    if preset:
        settings["experiment"]["preset"] = preset
    _merge(settings, overrides or {})
    return settings


def _merge(into: Settings, layer: Settings, source: str | None = None):
    for section, kv in layer.items():
        if section not in into:
            where = f"{source}: " if source else ""
            raise ConfigurationError(f"{where}unknown section [{section}]")
        for key, value in kv.items():
            if key not in into[section]:
                where = f"{source}: " if source else ""
                raise ConfigurationError(f"{where}unknown key {key!r} in [{section}]")
            into[section][key] = str(value)


def read_ini(path) -> Settings:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: config file not found")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return {s: dict(cp[s]) for s in cp.sections()}


class _Reader:
    """Typed access to settings with errors that name section and key."""

    def __init__(self, settings: Settings):
        self.s = settings

    def raw(self, section: str, key: str) -> str:
        return self.s[section][key].strip()

    def _fail(self, section, key, kind, exc=None):
        detail = f": {exc}" if exc else ""
        raise ConfigurationError(
            f"[{section}] {key} = {self.s[section][key]!r} is not a valid {kind}{detail}"
        ) from None

    def int(self, section, key) -> int:
        try:
            return int(self.raw(section, key))
        except ValueError:
            self._fail(section, key, "integer")

    def float(self, section, key) -> float:
        try:
            return float(self.raw(section, key))
        except ValueError:
            self._fail(section, key, "number")

    def complex(self, section, key) -> complex:
        text = self.raw(section, key).replace(" ", "").replace("i", "j")
        try:
            if "/" in text:
                num, den = text.split("/")
                return complex(num.strip("()")) / complex(den.strip("()"))
            return complex(text)
        except (ValueError, ZeroDivisionError):
            self._fail(section, key, "complex number")

    def bool(self, section, key) -> bool:
        text = self.raw(section, key).lower()
        if text in {"1", "true", "yes", "on"}:
            return True
        if text in {"0", "false", "no", "off"}:
            return False
        self._fail(section, key, "boolean")

    def vector(self, section, key, n) -> list[float]:
        try:
            vals = [float(v) for v in self.raw(section, key).split(",")]
        except ValueError:
            self._fail(section, key, f"list of {n} numbers")
        if len(vals) != n:
            self._fail(section, key, f"list of {n} numbers")
        return vals

    def choice(self, section, key, options) -> str:
        v = self.raw(section, key)
        if v not in options:
            self._fail(section, key, f"choice among {', '.join(options)}")
        return v

    def path(self, section, key) -> Path | None:
        v = self.raw(section, key)
        return Path(v) if v else None


def _wrap(section: str, fn):
    try:
        return fn()
    except ConfigurationError as exc:
        if str(exc).startswith("["):
            raise
        raise ConfigurationError(f"[{section}] {exc}") from None


@dataclass
class ExperimentConfig:
    """A fully typed run description built from expanded settings."""

    mode: str
    preset: str
    seed: int
    oracle_kind: str
    coeffs: CGNLSCoefficients
    oracle_spec: object
    domain: Domain
    grid: GridSpec
    shape: NetworkShape
    n0: int
    nb: int
    nf: int
    boundary_mode: str
    tpinn: bool
    tpinn_nf: int | None
    rar: RARConfig | None
    optimizer: OptimizerConfig
    n_u: int
    noise_level: float
    lambda_init: LambdaVector
    truth: LambdaVector
    inverse_rar: RARConfig | None
    dataset: Path | None
    prediction: Path | None
    params: Path | None
    settings: Settings

    @property
    def solution(self):
        """Closed-form field function, or None for ingest-only setups."""
        return None if self.oracle_spec is None else as_solution(self.oracle_spec)


def build(settings: Settings) -> ExperimentConfig:
    r = _Reader(settings)
    mode = r.choice("experiment", "mode", MODES)
    kind = r.choice("oracle", "kind", ORACLES)
    coeffs = CGNLSCoefficients(r.float("oracle", "alpha"), r.float("oracle", "beta"), r.complex("oracle", "gamma"))
    spec = None
    if kind == "one-soliton":
        spec = _wrap("oracle", lambda: OneSolitonSpec(r.complex("oracle", "a"), r.complex("oracle", "b"), r.complex("oracle", "k"), coeffs))
    elif kind == "two-soliton":
        spec = _wrap("oracle", lambda: TwoSolitonSpec(
            r.complex("oracle", "k1"), r.complex("oracle", "k2"),
            *(r.complex("oracle", f"xi{m}{j}") for m in (1, 2) for j in (1, 2)),
            coeffs=coeffs,
        ))
    domain = _wrap("domain", lambda: Domain(*(r.float("domain", k) for k in ("x_lo", "x_hi", "t_lo", "t_hi"))))
    grid = _wrap("grid", lambda: GridSpec(domain.x_lo, domain.x_hi, domain.t_lo, domain.t_hi, r.int("grid", "nx"), r.int("grid", "nt")))
    bounds = domain.bounds if r.bool("network", "normalize_inputs") else None
    shape = _wrap("network", lambda: NetworkShape(r.int("network", "hidden_layers"), r.int("network", "hidden_width"), 4, "tanh", bounds))
    rar = None
    if r.bool("rar", "enabled"):
        rar = _wrap("rar", lambda: RARConfig(
            r.int("rar", "m"), r.float("rar", "epsilon0"), r.int("rar", "max_rounds"),
            r.int("rar", "candidate_pool"), r.int("rar", "refit_iterations"),
        ))
        inverse_rar = _wrap("inverse", lambda: RARConfig(
            r.int("inverse", "m"), r.float("inverse", "epsilon0"), r.int("inverse", "max_rounds"),
            r.int("rar", "candidate_pool"), r.int("rar", "refit_iterations"),
        ))
    else:
        inverse_rar = None
    adam = _wrap("adam", lambda: AdamConfig(*(r.float("adam", k) for k in ("lr", "beta1", "beta2", "eps")), r.int("adam", "iterations")))
    lbfgs = _wrap("lbfgs", lambda: LBFGSConfig(
        memory=r.int("lbfgs", "memory"), gtol=r.float("lbfgs", "gtol"),
        ftol=r.float("lbfgs", "ftol"), max_iter=r.int("lbfgs", "max_iter"),
    ))
    tpinn_nf = r.raw("sampling", "tpinn_nf")
    cfg = ExperimentConfig(
        mode=mode,
        preset=r.raw("experiment", "preset"),
        seed=r.int("experiment", "seed"),
        oracle_kind=kind,
        coeffs=coeffs,
        oracle_spec=spec,
        domain=domain,
        grid=grid,
        shape=shape,
        n0=r.int("sampling", "n0"),
        nb=r.int("sampling", "nb"),
        nf=r.int("sampling", "nf"),
        boundary_mode=r.choice("sampling", "boundary_mode", BOUNDARY_MODES),
        tpinn=r.bool("sampling", "tpinn"),
        tpinn_nf=r.int("sampling", "tpinn_nf") if tpinn_nf else None,
        rar=rar,
        optimizer=OptimizerConfig(adam, lbfgs),
        n_u=r.int("inverse", "n_u"),
        noise_level=r.float("inverse", "noise_level"),
        lambda_init=LambdaVector(*r.vector("inverse", "lambda_init", 4)),
        truth=LambdaVector(*r.vector("inverse", "truth", 4)),
        inverse_rar=inverse_rar,
        dataset=r.path("paths", "dataset"),
        prediction=r.path("paths", "prediction"),
        params=r.path("paths", "params"),
        settings=settings,
    )
    _check_mode(cfg)
    return cfg


def _check_mode(cfg: ExperimentConfig):
    if cfg.n0 < 1 or cfg.nf < 1 or cfg.nb < 0:
        raise ConfigurationError("[sampling] needs n0 >= 1, nb >= 0 and nf >= 1")
    if cfg.mode == "generate" and cfg.oracle_spec is None:
        raise ConfigurationError("[oracle] kind = none cannot generate data; ingest a dataset instead")
    if cfg.mode in ("train-forward", "train-inverse") and cfg.oracle_spec is None and cfg.dataset is None:
        raise ConfigurationError("[paths] dataset is required when the oracle kind is none")
    if cfg.mode == "train-inverse":
        c = cfg.coeffs
        if (c.alpha, c.beta, complex(c.gamma)) != (1.0, 1.0, 1 + 0j):
            raise ConfigurationError("[oracle] identification assumes alpha = beta = gamma = 1")
        if not 0 <= cfg.noise_level < 1:
            raise ConfigurationError("[inverse] noise_level must lie in [0, 1)")
    if cfg.mode == "evaluate":
        if cfg.prediction is None:
            raise ConfigurationError("[paths] prediction is required for evaluate")
        if cfg.oracle_spec is None and cfg.dataset is None:
            raise ConfigurationError("[paths] dataset (the exact field) is required for evaluate without an oracle")
        if cfg.dataset is not None and cfg.prediction.resolve() == cfg.dataset.resolve():
            raise ConfigurationError("[paths] prediction and dataset must be different files")
