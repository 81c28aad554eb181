"""Command-line driver: run configuration, the four commands and file output.

A run is described by one JSON document (``--config``) whose keys can be
overridden from the command line, either through the dedicated flags or with
``--set dotted.key=value``.  Outputs are plain CSV and JSON so any plotting
tool can pick them up.

Exit codes: 0 on success, 2 for a bad configuration and 3 when the
computation itself fails.  Errors are also written to stderr as one JSON
object.
"""

from __future__ import annotations

import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import click

from .asymptotics import (
    GroupSettings,
    PatternSettings,
    RootSettings,
    classify_groups,
    compare_maps,
    pattern_checks,
    predict_peaks,
)
from .field_eval import (
    DetectionSettings,
    FieldGrid,
    PeakMap,
    SolutionSpec,
    auto_window,
    build_tau,
    detect_peaks,
    grid_eval,
)
from .polyring import Gaussian
from .partition_core import (
    InvalidPartitionError,
    classify_special,
    conjugate,
    make_partition,
    parse_partition,
    young_diagram,
)

EXIT_CONFIG = 2
EXIT_COMPUTE = 3


class ConfigError(ValueError):
    """Raised when a run configuration cannot be used."""


@dataclass(frozen=True)
class GridConfig:
    r_min: float
    r_max: float
    s_min: float
    s_max: float
    nr: int = 301
    ns: int = 301

    @classmethod
    def parse(cls, text: str) -> "GridConfig":
        """``rmin,rmax,smin,smax[,nr,ns]``."""
        chunks = [c for c in text.replace(" ", "").split(",") if c]
        if len(chunks) not in (4, 6):
            raise ConfigError(f"grid needs 4 or 6 comma-separated values, got {text!r}")
        try:
            bounds = [float(c) for c in chunks[:4]]
            counts = [int(c) for c in chunks[4:]]
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid {text!r}") from exc
        return cls(*bounds, *counts)

    def validate(self) -> None:
        if not (self.r_min < self.r_max and self.s_min < self.s_max):
            raise ConfigError("grid bounds must satisfy min < max on both axes")
        if self.nr < 2 or self.ns < 2:
            raise ConfigError("grid needs at least two nodes per axis")


@dataclass
class RunConfig:
    partition: tuple[int, ...] = (1, 1)
    b: str = "1/2"
    omega: str = "1/2"
    gammas: tuple = ("0", "0", "0")
    t: float = 10.0
    grid: GridConfig | None = None
    nodes: int = 301
    detection: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)
    roots: dict = field(default_factory=dict)
    patterns: dict = field(default_factory=dict)
    out: str = "lumpkit_out"

    def spec(self) -> SolutionSpec:
        gammas = tuple(_parse_complex(g) for g in self.gammas)
        return SolutionSpec(make_partition(self.partition), _parse_rational(self.b), _parse_rational(self.omega), gammas)

    def resolved_grid(self, spec: SolutionSpec) -> GridConfig:
        if self.grid is not None:
            return self.grid
        half = auto_window(spec, self.t)
        return GridConfig(-half, half, -half, half, self.nodes, self.nodes)

    def settings(self, kind: type, values: dict):
        known = {f.name for f in fields(kind)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown {kind.__name__} keys: {sorted(unknown)}")
        coerced = {}
        for key, value in values.items():
            coerced[key] = tuple(value) if isinstance(value, list) else value
        return kind(**coerced)

    def to_json(self) -> dict:
        out = asdict(self)
        out["partition"] = list(self.partition)
        out["gammas"] = list(self.gammas)
        return out


def _parse_rational(value: Any) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational number: {value!r}") from exc


def _parse_complex(value: Any):
    """Gamma constants: a rational, a ``[re, im]`` pair of rationals, or a complex literal.

    The first two stay exact; a literal such as ``"0.5+1j"`` is read as a
    complex float.
    """
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex pair needs two entries: {value!r}")
        return Gaussian(_parse_rational(value[0]), _parse_rational(value[1]))
    text = str(value).replace(" ", "")
    try:
        return Fraction(text)
    except ValueError:
        pass
    try:
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"not a complex number: {value!r}") from exc


def _coerce_scalar(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, dotted: str, value: Any) -> None:
    """Set ``doc[a][b][c] = value`` for ``dotted = "a.b.c"``, creating levels as needed."""
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        nxt = node.get(key)
        if nxt is None:
            nxt = node[key] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot descend into {key!r} of {dotted!r}")
        node = nxt
    node[keys[-1]] = value


def build_config(doc: dict) -> RunConfig:
    """Turn a (merged) JSON document into a validated RunConfig."""
    known = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values = dict(doc)
    part = values.get("partition", RunConfig.partition)
    try:
        if isinstance(part, str):
            values["partition"] = parse_partition(part).parts
        else:
            values["partition"] = make_partition(list(part)).parts
    except (InvalidPartitionError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    grid = values.get("grid")
    if isinstance(grid, str):
        values["grid"] = GridConfig.parse(grid)
    elif isinstance(grid, dict):
        try:
            values["grid"] = GridConfig(**grid)
        except TypeError as exc:
            raise ConfigError(f"bad grid block: {exc}") from exc
    if "gammas" in values:
        gam = list(values["gammas"])
        if len(gam) != 3:
            raise ConfigError("gammas needs exactly three entries")
        values["gammas"] = tuple(g if isinstance(g, list) else str(g) for g in gam)
    for key in ("b", "omega"):
        if key in values:
            values[key] = str(values[key])
    try:
        values["t"] = float(values.get("t", RunConfig.t))
        values["nodes"] = int(values.get("nodes", RunConfig.nodes))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric value: {exc}") from exc
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if not math.isfinite(cfg.t):
        raise ConfigError("t must be finite")
    for key in ("b", "omega"):
        if _parse_rational(getattr(cfg, key)) == 0:
            raise ConfigError(f"{key} must be nonzero")
    for g in cfg.gammas:
        _parse_complex(g)
    if cfg.grid is not None:
        cfg.grid.validate()
    if cfg.nodes < 2:
        raise ConfigError("nodes must be at least 2")
    cfg.settings(DetectionSettings, cfg.detection)
    cfg.settings(GroupSettings, cfg.groups)
    cfg.settings(RootSettings, cfg.roots)
    cfg.settings(PatternSettings, cfg.patterns)


def load_config(path: str | None, overrides: dict[str, Any]) -> RunConfig:
    doc: dict = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
    for key, value in overrides.items():
        apply_override(doc, key, value)
    return build_config(doc)


# ---------------------------------------------------------------------------
# Writers


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_grid_csv(path: Path, grid: FieldGrid) -> int:
    """``r,s,v`` rows with LF endings; floats use repr so they round-trip exactly."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "s", "v"])
        for r, s, v in grid.rows():
            writer.writerow([repr(float(r)), repr(float(s)), repr(float(v))])
            count += 1
    return count


def write_comparison_csv(path: Path, comparison: dict) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["detected_r", "detected_s", "predicted_r", "predicted_s", "distance"])
        for pair in comparison["pairs"]:
            writer.writerow([*map(repr, pair["detected"]), *map(repr, pair["predicted"]), repr(pair["distance"])])


# ---------------------------------------------------------------------------
# Command bodies (importable without click)


def info_report(cfg: RunConfig) -> dict:
    lam = make_partition(cfg.partition)
    spec = cfg.spec()
    return {
        "partition": list(lam.parts),
        "N": lam.N,
        "n": lam.n,
        "degree_vector": list(lam.degrees),
        "m_n": lam.m_n,
        "M": lam.lump_count,
        "conjugate": list(conjugate(lam).parts),
        "classification": sorted(classify_special(lam)),
        "peak_polarity": spec.peak_polarity(),
        "diagram": young_diagram(lam),
    }


def run_field(cfg: RunConfig) -> tuple[FieldGrid, dict]:
    spec = cfg.spec()
    grid_cfg = cfg.resolved_grid(spec)
    start = time.perf_counter()
    tau = build_tau(spec)
    built = time.perf_counter() - start
    grid = grid_eval(tau, cfg.t, (grid_cfg.r_min, grid_cfg.r_max), (grid_cfg.s_min, grid_cfg.s_max), grid_cfg.nr, grid_cfg.ns)
    meta = {
        "config": cfg.to_json(),
        "spec": spec.to_json(),
        "grid": asdict(grid_cfg),
        "tau_degree": tau.degree(),
        "tau_terms": len(tau.terms),
        "seconds_build": built,
        "seconds_grid": grid.seconds,
        "singular_nodes": grid.singular,
    }
    if grid.singular and len(grid.singular) == grid_cfg.nr * grid_cfg.ns:
        raise ArithmeticError("tau is non-positive at every grid node")
    return grid, meta


def run_peaks(cfg: RunConfig, grid: FieldGrid | None = None) -> tuple[PeakMap, dict]:
    spec = cfg.spec()
    tau = build_tau(spec)
    if grid is None:
        g = cfg.resolved_grid(spec)
        grid = grid_eval(tau, cfg.t, (g.r_min, g.r_max), (g.s_min, g.s_max), g.nr, g.ns)
    detected = detect_peaks(grid, tau, cfg.settings(DetectionSettings, cfg.detection))
    classified = classify_groups(detected, spec, cfg.settings(GroupSettings, cfg.groups))
    return classified, {"grid_seconds": grid.seconds, "singular_nodes": len(grid.singular)}


def run_predict(cfg: RunConfig, compare: bool = False) -> dict:
    if cfg.t == 0:
        raise ConfigError("prediction needs |t| > 0")
    spec = cfg.spec()
    start = time.perf_counter()
    predicted = predict_peaks(spec, cfg.t, cfg.settings(RootSettings, cfg.roots))
    predicted = classify_groups(predicted, spec, cfg.settings(GroupSettings, cfg.groups))
    patterns = pattern_checks(predicted, spec, cfg.settings(PatternSettings, cfg.patterns))
    result = {
        "predicted": predicted,
        "patterns": patterns,
        "seconds_predict": time.perf_counter() - start,
    }
    if compare:
        detected, _ = run_peaks(cfg)
        comparison = compare_maps(detected, predicted)
        comparison["shortfall"] = predicted.notes.get("shortfall", 0)
        comparison["detected_count"] = len(detected.peaks)
        comparison["predicted_count"] = len(predicted.peaks)
        result["detected"] = detected
        result["comparison"] = comparison
    return result


# ---------------------------------------------------------------------------
# Click wiring


def _fail(code: int, kind: str, message: str) -> None:
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


def _guarded(fn):
    """Map configuration and computation failures onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, InvalidPartitionError) as exc:
            _fail(EXIT_CONFIG, "config", str(exc))
        except (ArithmeticError, ValueError, RuntimeError, MemoryError) as exc:
            _fail(EXIT_COMPUTE, "computation", f"{type(exc).__name__}: {exc}")

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _common(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON run configuration."),
        click.option("--partition", default=None, help="Partition parts, e.g. 1,1."),
        click.option("--b", "b_value", default=None, help="Parameter b (rational)."),
        click.option("--omega", default=None, help="Parameter omega (rational)."),
        click.option("--t", "t_value", type=float, default=None, help="Time slice."),
        click.option("--grid", default=None, help="rmin,rmax,smin,smax[,nr,ns]."),
        click.option("--out", default=None, help="Output directory."),
        click.option("--set", "sets", multiple=True, help="Dotted override, e.g. detection.threshold=1e-4."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _config_from(config_path, partition, b_value, omega, t_value, grid, out, sets) -> RunConfig:
    overrides: dict[str, Any] = {}
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _coerce_scalar(value.strip())
    flagged = {"partition": partition, "b": b_value, "omega": omega, "t": t_value, "grid": grid, "out": out}
    overrides.update({k: v for k, v in flagged.items() if v is not None})
    return load_config(config_path, overrides)


@click.group()
def main() -> None:
    """Multi-lump solutions from integer partitions: tau, field, peaks and predictions."""


@main.command()
@_common
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json")
@_guarded
def info(config_path, partition, b_value, omega, t_value, grid, out, sets, fmt):
    """Report the partition data and its special classification."""
    cfg = _config_from(config_path, partition, b_value, omega, t_value, grid, out, sets)
    report = info_report(cfg)
    if fmt == "json":
        click.echo(json.dumps(report, indent=2))
    else:
        for key in ("partition", "N", "n", "degree_vector", "m_n", "M", "conjugate", "classification"):
            click.echo(f"{key}: {report[key]}")
        click.echo(report["diagram"])


@main.command(name="field")
@_common
@_guarded
def field_cmd(config_path, partition, b_value, omega, t_value, grid, out, sets):
    """Evaluate v on a grid; writes field.csv and field_meta.json."""
    cfg = _config_from(config_path, partition, b_value, omega, t_value, grid, out, sets)
    grid_result, meta = run_field(cfg)
    out_dir = Path(cfg.out)
    meta["rows"] = write_grid_csv(out_dir / "field.csv", grid_result)
    write_json(out_dir / "field_meta.json", meta)
    click.echo(json.dumps({"csv": str(out_dir / "field.csv"), "rows": meta["rows"], "singular": len(grid_result.singular)}))


@main.command()
@_common
@_guarded
def peaks(config_path, partition, b_value, omega, t_value, grid, out, sets):
    """Detect and classify peaks; writes peaks.json."""
    cfg = _config_from(config_path, partition, b_value, omega, t_value, grid, out, sets)
    detected, meta = run_peaks(cfg)
    payload = detected.to_json()
    payload["run"] = {"config": cfg.to_json(), **meta}
    write_json(Path(cfg.out) / "peaks.json", payload)
    click.echo(json.dumps({"peaks": len(detected.peaks), **{k: detected.notes[k] for k in ("multi_groups", "singles", "consistent")}}))


@main.command()
@_common
@click.option("--compare", is_flag=True, help="Also detect peaks and match them to the prediction.")
@_guarded
def predict(config_path, partition, b_value, omega, t_value, grid, out, sets, compare):
    """Predict peaks from the leading condition; writes predicted.json and patterns.json."""
    cfg = _config_from(config_path, partition, b_value, omega, t_value, grid, out, sets)
    result = run_predict(cfg, compare)
    out_dir = Path(cfg.out)
    write_json(out_dir / "predicted.json", result["predicted"].to_json())
    write_json(out_dir / "patterns.json", result["patterns"].to_json())
    summary = {"predicted": len(result["predicted"].peaks), "shortfall": result["predicted"].notes.get("shortfall", 0)}
    if compare:
        write_json(out_dir / "detected.json", result["detected"].to_json())
        write_json(out_dir / "comparison.json", result["comparison"])
        write_comparison_csv(out_dir / "comparison.csv", result["comparison"])
        summary.update({k: result["comparison"][k] for k in ("mean", "max", "relative_mean")})
    click.echo(json.dumps(summary))


if __name__ == "__main__":
    main()
