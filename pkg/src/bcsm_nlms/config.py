"""Experiment configuration files: parsing, validation, and presets.

Configs are YAML mappings. Every validation failure raises
:class:`ConfigError` naming the offending key path, so CLI users see
"algorithms[1].step_size: must be > 0" rather than a traceback.
Bound-like quantities (the set-membership error bound, the shrinkage
threshold) accept either a plain number or a one-key mapping
``{absolute: v}`` / ``{sigma_v_multiple: m}``; the multiple form is
resolved per trial against the injected output-noise level.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .harness import ALGORITHM_KINDS, AlgorithmSpec, BoundSpec, EstimatorSpec
from .kernels import BOUND_MODES
from .signals import Ar1Input, FileInput, InputSpec, Scenario, WhiteInput, derive_seed, random_system

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "LabeledAlgorithm",
    "load_config",
    "resolve_config_source",
    "preset_names",
    "preset_text",
    "effective_parameters",
]

DEFAULT_SEED = 12345
DEFAULT_TRIALS = 1
DEFAULT_OUTPUT_DIR = "results"

#: Spawn-key namespace for the random-system draw (trial seeds use 0).
_SYSTEM_KEY = 1

_PRESET_DESCRIPTIONS = {
    "ar1_fig2": "AR(1) input, noisy regressors: 100-trial NMSD benchmark of "
    "SM-NLMS vs bias-compensated variants",
    "speech_fig3_template": "single-trial speech-input benchmark; edit "
    "scenario.input.path to point at your recording",
}


class ConfigError(ValueError):
    """A configuration file failed validation; message names the key."""


@dataclass(frozen=True)
class LabeledAlgorithm:
    label: str
    spec: AlgorithmSpec


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A fully-resolved experiment: scenario, labeled algorithms, run shape."""

    scenario: Scenario
    algorithms: tuple[LabeledAlgorithm, ...]
    trials: int
    output_dir: Path
    seed: int
    system_source: str  # "random" or "explicit", for the summary echo


class _Section:
    """A mapping plus its key path; tracks consumed keys to flag typos."""

    def __init__(self, mapping, path: str):
        if not isinstance(mapping, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping")
        self.mapping = mapping
        self.path = path
        self.seen: set[str] = set()

    def _key(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.mapping

    def raw(self, key: str, default=None, required=False):
        self.seen.add(key)
        if key not in self.mapping:
            if required:
                raise ConfigError(f"{self._key(key)}: required key is missing")
            return default
        return self.mapping[key]

    def subsection(self, key: str, required=False) -> "_Section | None":
        value = self.raw(key, required=required)
        if value is None:
            return None
        return _Section(value, self._key(key))

    def string(self, key: str, default=None, required=False, choices=None):
        value = self.raw(key, default, required)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ConfigError(f"{self._key(key)}: expected a string")
        if choices is not None and value not in choices:
            raise ConfigError(
                f"{self._key(key)}: must be one of {', '.join(choices)}; got {value!r}"
            )
        return value

    def integer(self, key: str, default=None, required=False, minimum=None):
        value = self.raw(key, default, required)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{self._key(key)}: expected an integer")
        if minimum is not None and value < minimum:
            raise ConfigError(f"{self._key(key)}: must be >= {minimum}")
        return value

    def number(self, key: str, default=None, required=False, allow_none=False):
        value = self.raw(key, default, required)
        if value is None:
            if allow_none or default is None:
                return None
            raise ConfigError(f"{self._key(key)}: expected a number")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{self._key(key)}: expected a number")
        return float(value)

    def finish(self) -> None:
        unknown = set(self.mapping) - self.seen
        if unknown:
            name = sorted(unknown)[0]
            raise ConfigError(f"{self._key(name)}: unknown key")


def _parse_bound(section: _Section, key: str, required=False) -> BoundSpec | None:
    value = section.raw(key, required=required)
    if value is None:
        return None
    path = f"{section.path}.{key}" if section.path else key
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        bound = BoundSpec.absolute(float(value))
    elif isinstance(value, dict):
        sub = _Section(value, path)
        absolute = sub.number("absolute")
        multiple = sub.number("sigma_v_multiple")
        sub.finish()
        if (absolute is None) == (multiple is None):
            raise ConfigError(
                f"{path}: give exactly one of 'absolute' or 'sigma_v_multiple'"
            )
        bound = (
            BoundSpec.absolute(absolute)
            if absolute is not None
            else BoundSpec.sigma_v_multiple(multiple)
        )
    else:
        raise ConfigError(f"{path}: expected a number or a one-key mapping")
    if bound.value < 0.0:
        raise ConfigError(f"{path}: must be >= 0")
    return bound


def _parse_input(section: _Section) -> InputSpec:
    sub = section.subsection("input", required=True)
    kind = sub.string("kind", required=True, choices=("ar1", "white", "file"))
    try:
        if kind == "ar1":
            pole = sub.number("pole", required=True)
            drive = sub.number("drive_variance", allow_none=True)
            sub.finish()
            return Ar1Input(pole=pole, drive_variance=drive)
        if kind == "white":
            variance = sub.number("variance", default=1.0)
            sub.finish()
            return WhiteInput(variance=variance)
        path = sub.string("path", required=True)
        channel = sub.integer("channel", default=0, minimum=0)
        sub.finish()
        if not Path(path).exists():
            raise ConfigError(f"{sub.path}.path: sample file not found: {path}")
        return FileInput(path=path, channel=channel)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{sub.path}: {exc}") from exc


def _parse_scenario(section: _Section, seed: int) -> tuple[Scenario, str]:
    sub = section.subsection("scenario", required=True)
    input_spec = _parse_input(sub)
    n_samples = sub.integer("n_samples", required=True, minimum=1)
    input_snr = sub.number("input_snr_db", allow_none=True)
    output_snr = sub.number("output_snr_db", allow_none=True)
    system_raw = sub.raw("system", default="random")
    length = sub.integer("filter_length", minimum=1)
    sub.finish()

    if isinstance(system_raw, str):
        if system_raw != "random":
            raise ConfigError(f"{sub.path}.system: expected 'random' or a list of taps")
        if length is None:
            raise ConfigError(
                f"{sub.path}.filter_length: required when system is 'random'"
            )
        system = random_system(length, derive_seed(seed, _SYSTEM_KEY))
        source = "random"
    elif isinstance(system_raw, list):
        try:
            system = np.asarray([float(v) for v in system_raw], dtype=np.float64)
        except (TypeError, ValueError):
            raise ConfigError(f"{sub.path}.system: expected a list of numbers")
        if length is not None and length != system.size:
            raise ConfigError(
                f"{sub.path}.filter_length: {length} does not match the "
                f"{system.size}-tap system"
            )
        source = "explicit"
    else:
        raise ConfigError(f"{sub.path}.system: expected 'random' or a list of taps")

    try:
        scenario = Scenario(
            system=system,
            input_spec=input_spec,
            n_samples=n_samples,
            seed=seed,
            input_snr_db=input_snr,
            output_snr_db=output_snr,
        )
    except ValueError as exc:
        raise ConfigError(f"{sub.path}: {exc}") from exc
    return scenario, source


def _parse_algorithm(entry, index: int) -> LabeledAlgorithm:
    sec = _Section(entry, f"algorithms[{index}]")
    label = sec.string("label", required=True)
    kind = sec.string("kind", required=True, choices=ALGORITHM_KINDS)
    step_size = sec.number("step_size", required=True)
    bound = _parse_bound(sec, "error_bound")
    regularizer = sec.number("regularizer", default=1e-8)
    bound_mode = sec.string("bound_mode", default="symmetric", choices=BOUND_MODES)
    known_variance = sec.number("known_variance", allow_none=True)
    est_sec = sec.subsection("estimator")
    estimator = None
    if est_sec is not None:
        beta = est_sec.number("beta", default=0.99)
        threshold = _parse_bound(est_sec, "threshold")
        floor = est_sec.number("wnorm_floor", default=1e-6)
        est_sec.finish()
        estimator = EstimatorSpec(
            beta=beta,
            threshold=threshold if threshold is not None else BoundSpec(0.0),
            wnorm_floor=floor,
        )
    sec.finish()
    try:
        spec = AlgorithmSpec(
            kind=kind,
            step_size=step_size,
            error_bound=bound,
            regularizer=regularizer,
            bound_mode=bound_mode,
            estimator=estimator,
            known_variance=known_variance,
        )
    except ValueError as exc:
        raise ConfigError(f"{sec.path}: {exc}") from exc
    return LabeledAlgorithm(label=label, spec=spec)


def load_config(
    source,
    seed: int | None = None,
    trials: int | None = None,
    output_dir=None,
) -> ExperimentConfig:
    """Parse a config file into an :class:`ExperimentConfig`.

    ``seed`` / ``trials`` / ``output_dir`` override the file's values
    (CLI flags). The random system, when requested, is drawn from the
    effective master seed, so overriding the seed re-rolls it.
    """
    text = Path(source).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse YAML: {exc}") from exc
    root = _Section(raw, "")
    eff_seed = seed if seed is not None else root.integer("seed", default=DEFAULT_SEED)
    if seed is not None:
        root.raw("seed")  # key consumed even when overridden
    eff_trials = (
        trials if trials is not None else root.integer("trials", default=DEFAULT_TRIALS)
    )
    if eff_trials < 1:
        key = "trials" if trials is None else "--trials"
        raise ConfigError(f"{key}: trials must be >= 1")
    if trials is not None:
        root.raw("trials")
    eff_out = (
        Path(output_dir)
        if output_dir is not None
        else Path(root.string("output_dir", default=DEFAULT_OUTPUT_DIR))
    )
    if output_dir is not None:
        root.raw("output_dir")

    scenario, system_source = _parse_scenario(root, eff_seed)
    algos_raw = root.raw("algorithms", required=True)
    if not isinstance(algos_raw, list) or not algos_raw:
        raise ConfigError("algorithms: expected a non-empty list")
    algorithms = tuple(_parse_algorithm(a, i) for i, a in enumerate(algos_raw))
    labels = [a.label for a in algorithms]
    if len(set(labels)) != len(labels):
        dup = sorted({l for l in labels if labels.count(l) > 1})[0]
        raise ConfigError(f"algorithms: duplicate label {dup!r}")
    root.finish()

    return ExperimentConfig(
        scenario=scenario,
        algorithms=algorithms,
        trials=eff_trials,
        output_dir=eff_out,
        seed=eff_seed,
        system_source=system_source,
    )


def _presets_dir():
    return importlib.resources.files("bcsm_nlms") / "presets"


def preset_names() -> list[str]:
    return sorted(p.name[: -len(".yaml")] for p in _presets_dir().iterdir()
                  if p.name.endswith(".yaml"))


def preset_description(name: str) -> str:
    return _PRESET_DESCRIPTIONS.get(name, "")


def preset_text(name: str) -> str:
    entry = _presets_dir() / f"{name}.yaml"
    if not entry.is_file():
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    return entry.read_text()


def resolve_config_source(value: str) -> Path:
    """Interpret ``--config``: an existing path wins, then a preset name."""
    p = Path(value)
    if p.exists():
        return p
    entry = _presets_dir() / f"{value}.yaml"
    if entry.is_file():
        return Path(str(entry))
    raise ConfigError(
        f"--config: {value!r} is neither a file nor a preset "
        f"(presets: {', '.join(preset_names())})"
    )


def _bound_echo(bound: BoundSpec | None):
    if bound is None:
        return None
    if bound.relative_to_sigma_v:
        return {"sigma_v_multiple": bound.value}
    return {"absolute": bound.value}


def _input_echo(spec: InputSpec) -> dict:
    if isinstance(spec, Ar1Input):
        return {
            "kind": "ar1",
            "pole": spec.pole,
            "drive_variance": spec.effective_drive_variance,
        }
    if isinstance(spec, WhiteInput):
        return {"kind": "white", "variance": spec.variance}
    return {"kind": "file", "path": str(spec.path), "channel": spec.channel}


def effective_parameters(cfg: ExperimentConfig) -> dict:
    """Every effective parameter, defaults included, for the summary echo."""
    algos = []
    for labeled in cfg.algorithms:
        spec = labeled.spec
        entry = {
            "label": labeled.label,
            "kind": spec.kind,
            "step_size": spec.step_size,
            "error_bound": _bound_echo(spec.error_bound),
            "regularizer": spec.regularizer,
            "bound_mode": spec.bound_mode,
        }
        if spec.kind == "bcsm_estimated":
            entry["estimator"] = {
                "beta": spec.estimator.beta,
                "threshold": _bound_echo(spec.estimator.threshold),
                "wnorm_floor": spec.estimator.wnorm_floor,
            }
        if spec.kind == "bcsm_known":
            entry["known_variance"] = (
                "injected" if spec.known_variance is None else spec.known_variance
            )
        algos.append(entry)
    sc = cfg.scenario
    return {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "output_dir": str(cfg.output_dir),
        "scenario": {
            "filter_length": sc.length,
            "n_samples": sc.n_samples,
            "system": cfg.system_source,
            "system_weights": [float(v) for v in sc.system],
            "input": _input_echo(sc.input_spec),
            "input_snr_db": sc.input_snr_db,
            "output_snr_db": sc.output_snr_db,
        },
        "algorithms": algos,
    }
