"""Experiment configuration: strict YAML schema, parsing, emission.

Every key is checked against the schema; unknown keys are reported
with their full path so typos fail loudly instead of being ignored.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .countsim import CountModel
from .ghost import default_theta_grid
from .optproj import ProjectorParam
from .polcalc import PolElement
from .qstate import TwoQubitDensity, bell_psi_plus, load_density_csv, werner


class ConfigError(ValueError):
    pass


@dataclass
class SampleSpec:
    family: str
    thetas: np.ndarray
    template: PolElement | None = None


@dataclass
class TomographySpec:
    integration_time: float | None = None
    records_csv: str | None = None


@dataclass
class OptimizeSpec:
    samples: list[PolElement]
    projectors: list[ProjectorParam]
    probe: ProjectorParam | None = None
    mode: str = "joint"
    restarts: int = 16
    max_evals: int = 4000
    vary_probe: bool = True
    vary_projectors: bool = True
    vary_extinction: bool = False


@dataclass
class ExperimentConfig:
    seed: int = 0
    runs: int = 8
    conditional: bool = False
    state: TwoQubitDensity = field(default_factory=bell_psi_plus)
    probe_elements: list[PolElement] = field(default_factory=list)
    projectors: list[list[PolElement]] = field(default_factory=list)
    samples: list[SampleSpec] = field(default_factory=list)
    counting: CountModel | None = None
    tomography: TomographySpec | None = None
    optimize: OptimizeSpec | None = None


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"'{path}' must be a mapping")
    return node


def _require_list(node, path: str) -> list:
    if not isinstance(node, list):
        raise ConfigError(f"'{path}' must be a list")
    return node


def _check_keys(mapping: dict, allowed: set[str], path: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key '{path}.{key}'" if path
                              else f"unknown key '{key}'")


def _number(node, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"'{path}' must be a number")
    return float(node)


def _integer(node, path: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ConfigError(f"'{path}' must be an integer")
    return node


def _boolean(node, path: str) -> bool:
    if not isinstance(node, bool):
        raise ConfigError(f"'{path}' must be true or false")
    return node


def parse_element(node, path: str) -> PolElement:
    node = _require_mapping(node, path)
    _check_keys(node, {"kind", "angle_deg", "extinction", "retardance_rad"}, path)
    if "kind" not in node or "angle_deg" not in node:
        raise ConfigError(f"'{path}' needs kind and angle_deg")
    kwargs = {}
    if "extinction" in node:
        kwargs["extinction"] = _number(node["extinction"], f"{path}.extinction")
    if "retardance_rad" in node:
        kwargs["retardance_rad"] = _number(
            node["retardance_rad"], f"{path}.retardance_rad"
        )
    try:
        return PolElement(node["kind"], _number(node["angle_deg"],
                                                f"{path}.angle_deg"), **kwargs)
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from exc


def element_to_dict(element: PolElement) -> dict:
    out: dict = {"kind": element.kind, "angle_deg": float(element.theta_deg)}
    if element.extinction is not None:
        out["extinction"] = float(element.extinction)
    if element.retardance_rad is not None:
        out["retardance_rad"] = float(element.retardance_rad)
    return out


def _parse_element_chain(node, path: str) -> list[PolElement]:
    node = _require_mapping(node, path)
    _check_keys(node, {"elements"}, path)
    if "elements" not in node:
        raise ConfigError(f"'{path}' needs an elements list")
    items = _require_list(node["elements"], f"{path}.elements")
    if not items:
        raise ConfigError(f"'{path}.elements' must not be empty")
    return [
        parse_element(el, f"{path}.elements[{i}]") for i, el in enumerate(items)
    ]


def _parse_state(node, path: str, base_dir: str) -> TwoQubitDensity:
    node = _require_mapping(node, path)
    _check_keys(node, {"kind", "p", "matrix_csv"}, path)
    kind = node.get("kind", "bell_psi_plus")
    if kind == "bell_psi_plus":
        _check_keys(node, {"kind"}, path)
        return bell_psi_plus()
    if kind == "werner":
        if "p" not in node:
            raise ConfigError(f"'{path}' with kind werner needs p")
        return werner(_number(node["p"], f"{path}.p"))
    if kind == "matrix_csv":
        if "matrix_csv" not in node:
            raise ConfigError(f"'{path}' with kind matrix_csv needs matrix_csv")
        rel = str(node["matrix_csv"])
        return load_density_csv(os.path.join(base_dir, rel))
    raise ConfigError(f"'{path}.kind' must be bell_psi_plus, werner or matrix_csv")


def _parse_thetas(node, path: str) -> np.ndarray:
    if node is None:
        return default_theta_grid()
    if isinstance(node, list):
        arr = np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(node)])
        return arr
    node = _require_mapping(node, path)
    _check_keys(node, {"start", "stop", "step"}, path)
    start = _number(node.get("start", 0.0), f"{path}.start")
    stop = _number(node.get("stop", 180.0), f"{path}.stop")
    step = _number(node.get("step", 1.0), f"{path}.step")
    if step <= 0.0:
        raise ConfigError(f"'{path}.step' must be > 0")
    return np.arange(start, stop, step)


def _parse_sample(node, path: str) -> SampleSpec:
    node = _require_mapping(node, path)
    _check_keys(node, {"family", "element", "thetas"}, path)
    family = node.get("family")
    if family not in ("LP", "QWP", "custom"):
        raise ConfigError(f"'{path}.family' must be LP, QWP or custom")
    template = None
    if family == "custom":
        if "element" not in node:
            raise ConfigError(f"'{path}' custom family needs an element")
        template = parse_element(node["element"], f"{path}.element")
    elif "element" in node:
        raise ConfigError(f"'{path}.element' is only valid for custom family")
    return SampleSpec(
        family=family,
        thetas=_parse_thetas(node.get("thetas"), f"{path}.thetas"),
        template=template,
    )


def _parse_counting(node, path: str) -> CountModel:
    node = _require_mapping(node, path)
    allowed = {
        "pair_rate", "integration_time", "eff_signal", "eff_idler",
        "coincidence_window", "singles_background", "drift_amplitude",
    }
    _check_keys(node, allowed, path)
    if "pair_rate" not in node or "integration_time" not in node:
        raise ConfigError(f"'{path}' needs pair_rate and integration_time")
    kwargs = {k: _number(v, f"{path}.{k}") for k, v in node.items()}
    try:
        return CountModel(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from exc


def _parse_tomography(node, path: str, base_dir: str) -> TomographySpec:
    node = _require_mapping(node, path)
    _check_keys(node, {"integration_time", "records_csv"}, path)
    spec = TomographySpec()
    if "integration_time" in node:
        spec.integration_time = _number(node["integration_time"],
                                        f"{path}.integration_time")
    if "records_csv" in node:
        spec.records_csv = os.path.join(base_dir, str(node["records_csv"]))
    return spec


def _parse_projector_param(node, path: str) -> ProjectorParam:
    node = _require_mapping(node, path)
    _check_keys(node, {"qwp_deg", "lp_deg", "extinction", "qwp_first"}, path)
    if "lp_deg" not in node:
        raise ConfigError(f"'{path}' needs lp_deg")
    qwp = node.get("qwp_deg")
    if qwp is not None:
        qwp = _number(qwp, f"{path}.qwp_deg")
    extinction = node.get("extinction", math.inf)
    if extinction is not None and not isinstance(extinction, bool) and \
            isinstance(extinction, (int, float)):
        extinction = float(extinction)
    else:
        raise ConfigError(f"'{path}.extinction' must be a number")
    return ProjectorParam(
        qwp_deg=qwp,
        lp_deg=_number(node["lp_deg"], f"{path}.lp_deg"),
        extinction=extinction,
        qwp_first=_boolean(node.get("qwp_first", True), f"{path}.qwp_first"),
    )


def _parse_optimize(node, path: str) -> OptimizeSpec:
    node = _require_mapping(node, path)
    allowed = {
        "samples", "projectors", "probe", "mode", "restarts", "max_evals",
        "vary_probe", "vary_projectors", "vary_extinction",
    }
    _check_keys(node, allowed, path)
    if "samples" not in node or "projectors" not in node:
        raise ConfigError(f"'{path}' needs samples and projectors")
    samples = []
    from .ghost import sample_element

    for i, item in enumerate(_require_list(node["samples"], f"{path}.samples")):
        item = _require_mapping(item, f"{path}.samples[{i}]")
        _check_keys(item, {"family", "theta_deg", "element"},
                    f"{path}.samples[{i}]")
        family = item.get("family")
        if family not in ("LP", "QWP", "custom"):
            raise ConfigError(
                f"'{path}.samples[{i}].family' must be LP, QWP or custom"
            )
        template = None
        if "element" in item:
            template = parse_element(item["element"],
                                     f"{path}.samples[{i}].element")
        if "theta_deg" not in item:
            raise ConfigError(f"'{path}.samples[{i}]' needs theta_deg")
        theta = _number(item["theta_deg"], f"{path}.samples[{i}].theta_deg")
        try:
            samples.append(sample_element(family, theta, template))
        except ValueError as exc:
            raise ConfigError(f"'{path}.samples[{i}]': {exc}") from exc
    projectors = [
        _parse_projector_param(p, f"{path}.projectors[{i}]")
        for i, p in enumerate(_require_list(node["projectors"],
                                            f"{path}.projectors"))
    ]
    spec = OptimizeSpec(samples=samples, projectors=projectors)
    if "probe" in node:
        spec.probe = _parse_projector_param(node["probe"], f"{path}.probe")
    if "mode" in node:
        mode = node["mode"]
        if mode not in ("joint", "sequential"):
            raise ConfigError(f"'{path}.mode' must be joint or sequential")
        spec.mode = mode
    if "restarts" in node:
        spec.restarts = _integer(node["restarts"], f"{path}.restarts")
    if "max_evals" in node:
        spec.max_evals = _integer(node["max_evals"], f"{path}.max_evals")
    for flag in ("vary_probe", "vary_projectors", "vary_extinction"):
        if flag in node:
            setattr(spec, flag, _boolean(node[flag], f"{path}.{flag}"))
    return spec


def parse_config_text(text: str, base_dir: str = ".") -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if data is None:
        data = {}
    data = _require_mapping(data, "<root>")
    allowed = {
        "seed", "runs", "conditional", "state", "probe", "projectors",
        "samples", "counting", "tomography", "optimize",
    }
    _check_keys(data, allowed, "")
    cfg = ExperimentConfig()
    if "seed" in data:
        cfg.seed = _integer(data["seed"], "seed")
    if "runs" in data:
        cfg.runs = _integer(data["runs"], "runs")
        if cfg.runs < 1:
            raise ConfigError("'runs' must be >= 1")
    if "conditional" in data:
        cfg.conditional = _boolean(data["conditional"], "conditional")
    if "state" in data:
        cfg.state = _parse_state(data["state"], "state", base_dir)
    if "probe" in data:
        cfg.probe_elements = _parse_element_chain(data["probe"], "probe")
    if "projectors" in data:
        items = _require_list(data["projectors"], "projectors")
        cfg.projectors = [
            _parse_element_chain(p, f"projectors[{i}]")
            for i, p in enumerate(items)
        ]
    if "samples" in data:
        items = _require_list(data["samples"], "samples")
        cfg.samples = [
            _parse_sample(s, f"samples[{i}]") for i, s in enumerate(items)
        ]
    if "counting" in data:
        cfg.counting = _parse_counting(data["counting"], "counting")
    if "tomography" in data:
        cfg.tomography = _parse_tomography(data["tomography"], "tomography",
                                           base_dir)
    if "optimize" in data:
        cfg.optimize = _parse_optimize(data["optimize"], "optimize")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, base_dir=os.path.dirname(os.path.abspath(path)))


def settings_fragment(probe: ProjectorParam | None,
                      projectors: tuple[ProjectorParam, ...]) -> str:
    """Best measurement settings as a reusable YAML config fragment."""
    doc: dict = {}
    if probe is not None:
        doc["probe"] = {
            "elements": [element_to_dict(e) for e in probe.elements()]
        }
    doc["projectors"] = [
        {"elements": [element_to_dict(e) for e in p.elements()]}
        for p in projectors
    ]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)
