"""Command line scenario runner.

Settings come from (lowest to highest precedence) built-in defaults, a
YAML file given by ``--config``, environment variables ``TWISTORLAB_<KEY>``
and command line flags.  The YAML file is a flat mapping; recognised keys
are listed in :data:`CONFIG_KEYS`.

Exit status: 0 when every check passes, 1 when any check fails, 2 on a
configuration error.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import click
import yaml

from . import __version__, catalog
from . import sigma_hypersurface as sh
from . import suites

ENV_PREFIX = "TWISTORLAB_"
FORMATS = ("json", "csv", "markdown")
CSV_COLUMNS = ("check_id", "manifold", "structure", "t", "sample_index", "residual",
               "tolerance", "pass")
SCHEMA_VERSION = 1


class ConfigError(click.ClickException):
    exit_code = 2


@dataclass(frozen=True)
class ScenarioConfig:
    manifold: Optional[str] = None
    structure: Optional[str] = None
    params: dict = field(default_factory=dict)
    t: tuple = sh.DEFAULT_T
    base_points: int = 4
    fiber_angles: int = 8
    samples: int = 20
    hopf_samples: int = 1000
    hopf_pairs: int = 200
    tolerance: Optional[float] = None
    seed: int = 0
    format: str = "json"
    out: Optional[str] = None
    workers: int = 1

    def settings(self) -> suites.Settings:
        return suites.Settings(seed=self.seed, t_values=tuple(self.t), base_points=self.base_points,
                               fiber_angles=self.fiber_angles, samples=self.samples,
                               hopf_samples=self.hopf_samples, hopf_pairs=self.hopf_pairs,
                               tolerance=self.tolerance)

    def entry_ids(self) -> tuple:
        return catalog.MANIFOLD_IDS if self.manifold is None else (self.manifold,)

    def public(self) -> dict:
        d = asdict(self)
        d["t"] = list(self.t)
        d.pop("out")
        d.pop("workers")  # neither changes the report
        return d


STRUCTURE_PARAMS = ("eps", "eps1", "eps2", "phi")
COUNT_KEYS = ("base_points", "fiber_angles", "samples", "hopf_samples", "hopf_pairs", "workers")
CONFIG_KEYS = ("manifold", "structure", *STRUCTURE_PARAMS, "t", *COUNT_KEYS, "tolerance",
               "seed", "format", "out")


# --- parsing and validation ------------------------------------------------------------


def parse_t_list(value) -> tuple:
    if isinstance(value, (int, float)):
        items = [value]
    elif isinstance(value, str):
        items = [v for v in value.replace(" ", "").split(",") if v]
    else:
        items = list(value)
    try:
        ts = tuple(float(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(f"t must be a list of numbers, got {value!r}")
    if not ts or any(not math.isfinite(t) or t <= 0 for t in ts):
        raise ConfigError(f"t values must be positive, got {value!r}")
    return ts


def _as_int(key, value) -> int:
    try:
        if isinstance(value, bool) or float(value) != int(float(value)):
            raise ValueError
        return int(float(value))
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}")


def _as_float(key, value) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if not math.isfinite(out):
        raise ConfigError(f"{key} must be finite")
    return out


def _coerce(raw: dict) -> dict:
    """Typed values for recognised keys; raises ConfigError otherwise."""
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    out: dict = {}
    for key, value in raw.items():
        if value is None:
            continue
        if key in ("manifold", "structure", "out", "format"):
            out[key] = str(value)
        elif key == "t":
            out[key] = parse_t_list(value)
        elif key in COUNT_KEYS:
            out[key] = _as_int(key, value)
            if out[key] < 1:
                raise ConfigError(f"{key} must be at least 1")
        elif key == "seed":
            out[key] = _as_int(key, value)
            if out[key] < 0:
                raise ConfigError("seed must be non-negative")
        elif key == "tolerance":
            out[key] = _as_float(key, value)
            if out[key] < 0:
                raise ConfigError("tolerance must be non-negative")
        elif key in ("eps", "eps1", "eps2"):
            out[key] = _as_int(key, value)
            if out[key] not in (1, -1):
                raise ConfigError(f"{key} must be +1 or -1")
        elif key == "phi":
            out[key] = _as_float(key, value)
    return out


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}")
    if data is None:
        return {}
    if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
        raise ConfigError(f"{path}: expected a flat mapping of keys to values")
    return data


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key in CONFIG_KEYS:
        name = ENV_PREFIX + key.upper()
        if name in environ:
            out[key] = environ[name]
    return out


def resolve_config(file_path: Optional[str] = None, flags: Optional[dict] = None,
                   environ=None) -> ScenarioConfig:
    merged: dict = {}
    if file_path:
        merged.update(_coerce(load_config_file(file_path)))
    merged.update(_coerce(env_overrides(environ)))
    merged.update(_coerce({k: v for k, v in (flags or {}).items() if v is not None}))
    params = {k: merged.pop(k) for k in STRUCTURE_PARAMS if k in merged}
    cfg = ScenarioConfig(params=params, **merged)
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
    if cfg.manifold is not None and cfg.manifold not in catalog.MANIFOLD_IDS:
        raise ConfigError(f"unknown manifold {cfg.manifold!r}; known: {', '.join(catalog.MANIFOLD_IDS)}")
    if cfg.structure is not None or cfg.params:
        try:
            suites.variants(cfg.entry_ids(), cfg.structure, cfg.params)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0]) if exc.args else str(exc))


# --- suites as library calls --------------------------------------------------------------


def _execute(suite: str, cfg: ScenarioConfig) -> list:
    items = suites.plan(suite, cfg.entry_ids(), cfg.settings(), cfg.structure, cfg.params)
    return suites.run(items, workers=cfg.workers)


def run_identities(cfg: ScenarioConfig) -> list:
    return _execute("identities", cfg)


def run_minimality(cfg: ScenarioConfig) -> list:
    return _execute("minimality", cfg)


def run_tables(cfg: ScenarioConfig) -> list:
    return _execute("tables", cfg)


def run_hopf(cfg: ScenarioConfig) -> list:
    return _execute("hopf", replace(cfg, manifold=None, structure=None, params={}))


# --- reports ----------------------------------------------------------------------------------


def _num(x: float):
    return x if math.isfinite(x) else repr(x)


def _t_text(t) -> str:
    return "" if t is None else repr(float(t))


def render_json(command: str, cfg: ScenarioConfig, records: list) -> str:
    failed = sum(not r.passed for r in records)
    doc = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "config": cfg.public(),
        "summary": {"records": len(records), "failed": failed, "passed": failed == 0},
        "records": [{
            "check_id": r.check_id, "manifold": r.manifold, "structure": r.structure,
            "t": r.t, "sample_index": r.sample_index, "residual": _num(r.residual),
            "tolerance": r.tolerance, "pass": r.passed, "inputs": r.inputs,
        } for r in records],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_csv(records: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r.check_id, r.manifold, r.structure, _t_text(r.t), r.sample_index,
                    repr(r.residual), repr(r.tolerance), "true" if r.passed else "false"])
    return buf.getvalue()


def render_markdown(command: str, records: list) -> str:
    groups: dict = {}
    for r in records:
        key = (r.check_id, r.manifold, r.structure, _t_text(r.t))
        g = groups.setdefault(key, [0, 0.0, r.tolerance, True])
        g[0] += 1
        g[1] = max(g[1], r.residual) if math.isfinite(g[1]) else g[1]
        g[3] = g[3] and r.passed
    failed = sum(not r.passed for r in records)
    lines = [f"# {command}", "",
             f"{len(records)} checks, {failed} failed.", "",
             "| check_id | manifold | structure | t | samples | max residual | tolerance | pass |",
             "|---|---|---|---|---|---|---|---|"]
    for (cid, man, st, t), (n, worst, tol, ok) in sorted(groups.items()):
        lines.append(f"| {cid} | {man} | {st} | {t} | {n} | {worst:.3e} | {tol:.1e} | "
                     f"{'yes' if ok else 'NO'} |")
    return "\n".join(lines) + "\n"


def render(command: str, cfg: ScenarioConfig, records: list) -> str:
    if cfg.format == "json":
        return render_json(command, cfg, records)
    if cfg.format == "csv":
        return render_csv(records)
    return render_markdown(command, records)


def listing() -> str:
    lines = ["manifolds and structures:"]
    for eid in catalog.MANIFOLD_IDS:
        entry = catalog.get(eid)
        lines.append(f"  {eid}: {entry.description}")
        for name, spec in entry.structures.items():
            shown = {k: v for k, v in spec.defaults.items() if k != "exact"}
            lines.append(f"    {name} [{spec.expected_class}] parameters: "
                         + (", ".join(f"{k}={v}" for k, v in shown.items()) or "none"))
    lines.append("checks:")
    lines += [f"  {cid} (tolerance {tol:g})" for cid, tol in sorted(suites.TOLERANCES.items())]
    lines.append(f"environment prefix: {ENV_PREFIX}<KEY>, keys: {', '.join(CONFIG_KEYS)}")
    return "\n".join(lines) + "\n"


# --- click wiring --------------------------------------------------------------------------


def _common(f):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False),
                     help="YAML file with flat keys."),
        click.option("--manifold", help="Catalog id (default: all)."),
        click.option("--structure", help="Structure name within the manifold."),
        click.option("--eps", type=int),
        click.option("--eps1", type=int),
        click.option("--eps2", type=int),
        click.option("--phi", type=float),
        click.option("--t", "t", help="Comma separated list of t values."),
        click.option("--seed", type=int),
        click.option("--base-points", "base_points", type=int),
        click.option("--fiber-angles", "fiber_angles", type=int),
        click.option("--samples", type=int),
        click.option("--workers", type=int, help="Worker processes."),
        click.option("--format", "format", type=click.Choice(FORMATS)),
        click.option("--out", type=click.Path(dir_okay=False), help="Write the report here."),
        click.option("--tolerance", type=float, help="Override every check tolerance."),
        click.option("--list", "list_only", is_flag=True,
                     help="List manifolds, structures and checks, then exit."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _run_command(command: str, runner, config_path, list_only, flags) -> None:
    if list_only:
        click.echo(listing(), nl=False)
        return
    cfg = resolve_config(config_path, flags)
    records = runner(cfg)
    text = render(command, cfg, records)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    failed = [r for r in records if not r.passed]
    if failed:
        click.echo(f"{len(failed)} of {len(records)} checks failed "
                   f"(first: {failed[0].check_id} on {failed[0].manifold})", err=True)
        sys.exit(1)


@click.group()
@click.version_option(__version__, prog_name="twistorlab")
def main() -> None:
    """Checks for the hypersurface Sigma_J in the twistor space of a 4-manifold."""


@main.command("verify-identities")
@_common
def verify_identities(config_path, list_only, **flags):
    """Algebraic identities, curvature identities and the connection oracle."""
    _run_command("verify-identities", run_identities, config_path, list_only, flags)


@main.command("check-minimality")
@_common
def check_minimality(config_path, list_only, **flags):
    """Trace of the second fundamental form and the minimality criteria."""
    _run_command("check-minimality", run_minimality, config_path, list_only, flags)


@main.command("reproduce-tables")
@_common
def reproduce_tables(config_path, list_only, **flags):
    """Regression tables of the catalog examples and the pushforward metrics."""
    _run_command("reproduce-tables", run_tables, config_path, list_only, flags)


@main.command("hopf-roundtrip")
@_common
def hopf_roundtrip(config_path, list_only, **flags):
    """Contact elements of S^3, complex structures on R^6 and CP^3.

    Here --samples sets the number of random round trips."""
    if flags.get("samples") is not None:
        flags["hopf_samples"] = flags.pop("samples")
    _run_command("hopf-roundtrip", run_hopf, config_path, list_only, flags)


if __name__ == "__main__":  # pragma: no cover
    main()
