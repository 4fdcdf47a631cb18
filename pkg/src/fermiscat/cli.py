"""Command-line runner: YAML config in, CSV series / reports / manifest out."""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import __version__
from .circuitqed import CircuitParams, DegenerateNetworkError, cosine_overlaps, derive_params, hardware_couplings, match_couplings
from .encoding import SECTOR_BITS, encode_state
from .evolve import EvolutionConfig, NumericalError, exact_evolve, trotter_error_report, trotter_evolve
from .fields import HARDWARE_KINDS, CouplingProfile, lambda1
from .model import FieldModel
from .observables import observable_series

log = logging.getLogger("fermiscat")

EXPERIMENTS = ("self-energy", "pair-creation", "trotter-convergence", "coupling-match", "circuit-params")


class ConfigError(ValueError):
    """Invalid configuration; message carries line/field diagnostics."""


# schema -------------------------------------------------------------------


@dataclass
class ModelSection:
    mass: float = 1.0
    p_f: float = 1.0
    p_fbar: float = -1.0
    sigma_p: float = 0.5
    k_min: float = 0.5
    k_max: float = 2.5
    n_k: int = 3
    n_max: int = 2
    coupling: Any = 0.3  # float, or one value per boson mode
    hardware_kind: str = "transmon"
    positions: list = field(default_factory=lambda: [0.0, 0.0])
    travel: float = 6.0
    n_x: Any = None
    n_p: Any = None


@dataclass
class EvolutionSection:
    t_end: float = 2.0
    substeps_per_unit: int = 100
    method: str = "exact"
    trotter_dt: float = 0.05
    dt_ladder: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    leakage_threshold: float = 1e-4
    record_every: int = 1
    input_state: Any = None  # default: f for self-energy, vacuum otherwise


@dataclass
class CircuitSection:
    C_r: float = 400e-15
    L_r: float = 2e-9
    c_tl: float = 1.6e-10
    l_tl: float = 4e-7
    C_c1: float = 5e-15
    C_c2: float = 5e-15
    C_gp: float = 1e-15
    C_gm: float = 1e-15
    C_I: float = 30e-15
    C_p: float = 60e-15
    C_m: float = 60e-15
    V_gp: float = 0.0
    V_gm: float = 0.0
    E_Jp: float = 0.0
    E_Jm: float = 0.0
    line_length: float = 1e-3
    omega_r: float = 2 * np.pi * 6e9
    line_omegas: list = field(default_factory=lambda: [2 * np.pi * 5e9, 2 * np.pi * 6e9, 2 * np.pi * 7e9])
    n_plus: float = 1.0
    n_minus: float = 1.0


@dataclass
class MatchingSection:
    beta_max: float = 1.0
    ripple_tol: float = 0.05
    qubit_position: float = 0.0
    profile_time: float = 0.0  # f(x) = |Lambda_1(x, t)|^2 at this time
    target: Any = None  # default: the model's coupling profile


@dataclass
class OutputSection:
    dir: str = "out"


SECTIONS = {
    "model": ModelSection,
    "evolution": EvolutionSection,
    "circuit": CircuitSection,
    "matching": MatchingSection,
    "output": OutputSection,
}


@dataclass
class RunConfig:
    experiment: str
    model: ModelSection
    evolution: EvolutionSection
    circuit: CircuitSection
    matching: MatchingSection
    output: OutputSection

    def resolved(self) -> dict:
        out = {"experiment": self.experiment}
        for name in SECTIONS:
            out[name] = dataclasses.asdict(getattr(self, name))
        return out


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a sign (``1e10``, ``2.5e-3``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)[eE][-+]?\d+$|^[-+]?(?:\d+\.\d*|\.\d+)$|^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$"),
    list("-+0123456789."),
)


def _line_map(text: str) -> dict[tuple[str, ...], int]:
    """1-based source line of every mapping key, by key path."""
    lines: dict[tuple[str, ...], int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = str(k.value)
                lines[path + (key,)] = k.start_mark.line + 1
                walk(v, path + (key,))

    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return lines
    walk(root, ())
    return lines


def _where(lines, path) -> str:
    line = lines.get(tuple(path))
    dotted = ".".join(path)
    return f"line {line}: {dotted}" if line else dotted


def _coerce(value, default, path, lines):
    """Type-check a scalar/list against the default's type."""
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if ok:
            value = float(value)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        if ok:
            value = [float(v) for v in value]
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{_where(lines, path)}: expected {type(default).__name__}, got {value!r}")
    return value


def _positive(lines, path, value, strict=True):
    if value is None:
        return
    vals = value if isinstance(value, list) else [value]
    for v in vals:
        if not np.isfinite(v) or (v <= 0 if strict else v < 0):
            raise ConfigError(f"{_where(lines, path)}: must be {'positive' if strict else 'non-negative'}, got {value!r}")


def parse_config(text: str) -> RunConfig:
    """Validate a YAML document into a :class:`RunConfig`."""
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{where}malformed YAML ({getattr(exc, 'problem', exc)})") from None
    lines = _line_map(text)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    unknown = sorted(str(k) for k in set(raw) - set(SECTIONS) - {"experiment"})
    if unknown:
        raise ConfigError(f"{_where(lines, [unknown[0]])}: unknown key (allowed: experiment, {', '.join(SECTIONS)})")
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"{_where(lines, ['experiment'])}: experiment must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")

    sections = {}
    for name, cls in SECTIONS.items():
        body = raw.get(name) or {}
        if not isinstance(body, dict):
            raise ConfigError(f"{_where(lines, [name])}: section must be a mapping")
        defaults = cls()
        allowed = {f.name for f in dataclasses.fields(cls)}
        for key in body:
            if key not in allowed:
                raise ConfigError(f"{_where(lines, [name, str(key)])}: unknown key (allowed: {', '.join(sorted(allowed))})")
        values = {}
        for key in allowed:
            default = getattr(defaults, key)
            values[key] = _coerce(body[key], default, [name, key], lines) if key in body else default
        sections[name] = cls(**values)
    cfg = RunConfig(experiment=experiment, **sections)
    _validate(cfg, lines)
    return cfg


def _validate(cfg: RunConfig, lines):
    m, ev = cfg.model, cfg.evolution
    for key in ("mass", "sigma_p", "k_max", "n_k", "n_max", "travel"):
        _positive(lines, ["model", key], getattr(m, key))
    _positive(lines, ["model", "k_min"], m.k_min, strict=False)
    if m.k_max <= m.k_min:
        raise ConfigError(f"{_where(lines, ['model', 'k_max'])}: must exceed k_min")
    if m.hardware_kind not in HARDWARE_KINDS:
        raise ConfigError(f"{_where(lines, ['model', 'hardware_kind'])}: must be one of {HARDWARE_KINDS}")
    if isinstance(m.coupling, list):
        if len(m.coupling) != m.n_k or not all(isinstance(v, (int, float)) for v in m.coupling):
            raise ConfigError(f"{_where(lines, ['model', 'coupling'])}: needs one number per boson mode ({m.n_k})")
        m.coupling = [float(v) for v in m.coupling]
    elif isinstance(m.coupling, (int, float)) and not isinstance(m.coupling, bool):
        m.coupling = float(m.coupling)
        _positive(lines, ["model", "coupling"], m.coupling, strict=False)
    else:
        raise ConfigError(f"{_where(lines, ['model', 'coupling'])}: must be a number or a list of numbers")
    if len(m.positions) != 2:
        raise ConfigError(f"{_where(lines, ['model', 'positions'])}: needs two qubit positions")
    for key in ("n_x", "n_p"):
        v = getattr(m, key)
        if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 3):
            raise ConfigError(f"{_where(lines, ['model', key])}: must be an integer >= 3 or null")
    for key in ("t_end", "substeps_per_unit", "trotter_dt", "dt_ladder", "leakage_threshold", "record_every"):
        _positive(lines, ["evolution", key], getattr(ev, key))
    if ev.method not in ("exact", "trotter"):
        raise ConfigError(f"{_where(lines, ['evolution', 'method'])}: must be 'exact' or 'trotter'")
    if ev.input_state is None:
        ev.input_state = "f" if cfg.experiment == "self-energy" else "vacuum"
    if ev.input_state not in SECTOR_BITS:
        raise ConfigError(f"{_where(lines, ['evolution', 'input_state'])}: must be one of {', '.join(SECTOR_BITS)}")
    if cfg.experiment == "trotter-convergence" and len(ev.dt_ladder) < 2:
        raise ConfigError(f"{_where(lines, ['evolution', 'dt_ladder'])}: needs at least two step sizes")
    c = cfg.circuit
    for key in ("C_r", "L_r", "c_tl", "l_tl", "C_gp", "C_gm", "C_I", "C_p", "C_m", "line_length", "omega_r", "line_omegas"):
        _positive(lines, ["circuit", key], getattr(c, key))
    for key in ("C_c1", "C_c2"):
        _positive(lines, ["circuit", key], getattr(c, key), strict=False)
    mt = cfg.matching
    _positive(lines, ["matching", "beta_max"], mt.beta_max)
    _positive(lines, ["matching", "ripple_tol"], mt.ripple_tol, strict=False)
    if mt.target is not None:
        if isinstance(mt.target, (int, float)) and not isinstance(mt.target, bool):
            mt.target = float(mt.target)
        elif isinstance(mt.target, list) and len(mt.target) == m.n_k:
            mt.target = [float(v) for v in mt.target]
        else:
            raise ConfigError(f"{_where(lines, ['matching', 'target'])}: must be a number or one number per mode")


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


# experiments --------------------------------------------------------------


def build_model(sec: ModelSection) -> FieldModel:
    prof = (
        CouplingProfile("table", table=np.asarray(sec.coupling))
        if isinstance(sec.coupling, list)
        else CouplingProfile("constant", sec.coupling)
    )
    return FieldModel.build(
        mass=sec.mass, p_f=sec.p_f, p_fbar=sec.p_fbar, sigma_p=sec.sigma_p,
        k_min=sec.k_min, k_max=sec.k_max, n_k=sec.n_k, n_max=sec.n_max,
        coupling=prof, hardware_kind=sec.hardware_kind, positions=sec.positions,
        travel=sec.travel, n_x=sec.n_x, n_p=sec.n_p,
    )


def _evolution_config(sec: EvolutionSection) -> EvolutionConfig:
    return EvolutionConfig(
        t_start=0.0, t_end=sec.t_end, substeps_per_unit=sec.substeps_per_unit,
        trotter_dt=sec.trotter_dt, leakage_threshold=sec.leakage_threshold, record_every=sec.record_every,
    )


def _model_facts(model: FieldModel) -> dict:
    return {
        "dim": model.space.dim,
        "n_qubits": model.space.n_qubits,
        "n_x": int(model.x.size),
        "n_p": int(model.env_f.grid.points.size),
        "k": [float(v) for v in model.k],
        "omega_k": [float(v) for v in model.omega_k],
    }


def _run_series(cfg: RunConfig, jobs: int) -> tuple[dict[str, str], dict]:
    model = build_model(cfg.model)
    psi = encode_state(cfg.evolution.input_state, model.space)
    ecfg = _evolution_config(cfg.evolution)
    if cfg.evolution.method == "exact":
        traj = exact_evolve(model, psi, ecfg)
    else:
        traj = trotter_evolve(model, psi, ecfg)
    series = observable_series(traj, model.k)
    info = _model_facts(model)
    info["leakage_max"] = float(series.leakage.max())
    info["warnings"] = list(traj.warnings)
    return {"series.csv": series.to_csv()}, info


def _run_convergence(cfg: RunConfig, jobs: int):
    model = build_model(cfg.model)
    psi = encode_state(cfg.evolution.input_state, model.space)
    ecfg = _evolution_config(cfg.evolution)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = trotter_error_report(model, psi, ecfg, tuple(cfg.evolution.dt_ladder), jobs=jobs)
    info = _model_facts(model)
    info["fitted_order"] = report.order
    info["warnings"] = sorted({str(w.message) for w in caught})
    return {"errors.csv": report.to_csv()}, info


def _run_matching(cfg: RunConfig, jobs: int):
    model = build_model(cfg.model)
    mt = cfg.matching
    f = np.abs(lambda1(model.env_f, model.x, mt.profile_time, model.dispersion)) ** 2
    overlaps = cosine_overlaps(model.k, lambda x: f, model.x, model.x_weights, mt.qubit_position)
    target = model.coupling.values(model.k) if mt.target is None else np.broadcast_to(mt.target, model.k.shape)
    match = match_couplings(target, model.k, model.omega_k, overlaps, mt.beta_max, model.hardware_kind, mt.ripple_tol)
    info = _model_facts(model)
    info.update(ripple=match.ripple, flat=bool(match.flat), infeasible_modes=[int(i) for i in np.flatnonzero(~match.feasible)])
    return {"matching.csv": match.to_csv()}, info


def _run_circuit(cfg: RunConfig, jobs: int):
    c = cfg.circuit
    names = {f.name for f in dataclasses.fields(CircuitParams)}
    params = CircuitParams(**{k: v for k, v in dataclasses.asdict(c).items() if k in names})
    derived = derive_params(params)
    hw = hardware_couplings(derived, params, c.omega_r, c.line_omegas, c.n_plus, c.n_minus)
    lines = [f"{k} = {v:.17g}" for k, v in derived.report().items()]
    lines.append(f"resonator_coupling = {hw.resonator:.17g}")
    for w, g in zip(hw.omega_k, hw.line):
        lines.append(f"line_coupling[omega={w:.17g}] = {g:.17g}")
    return {"params.txt": "\n".join(lines) + "\n"}, {"warnings": list(derived.warnings)}


RUNNERS = {
    "self-energy": _run_series,
    "pair-creation": _run_series,
    "trotter-convergence": _run_convergence,
    "coupling-match": _run_matching,
    "circuit-params": _run_circuit,
}


def run(cfg: RunConfig, out_dir: str | Path | None = None, jobs: int = 1) -> dict:
    """Execute one experiment and write its outputs plus ``manifest.json``."""
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    files, info = RUNNERS[cfg.experiment](cfg, jobs)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    manifest = {
        "version": __version__,
        "experiment": cfg.experiment,
        "config": cfg.resolved(),
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in files.items()},
        "run": info,
        "warnings": info.pop("warnings", []),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fermiscat", description="Simulate encoded fermion scattering off a boson band.")
    ap.add_argument("config", help="YAML run configuration")
    ap.add_argument("-o", "--out", default=None, help="output directory (overrides output.dir)")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    ap.add_argument("-j", "--jobs", type=int, default=1, help="parallel workers for dt ladders")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            manifest = run(cfg, args.out, args.jobs)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (DegenerateNetworkError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    for msg in manifest["warnings"]:
        log.warning(msg)
    log.info("wrote %s", ", ".join(manifest["outputs"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
