"""Config files, result tables and per-figure plot data."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import os
from collections import defaultdict
from dataclasses import fields
from pathlib import Path
from typing import Any, Iterable

import yaml

from . import __version__
from .campaign import RESULT_COLUMNS, ScenarioConfig, SweepConfig
from .channel import TdlProfile

FIGURES = ("evm_vs_snr", "bler_vs_snr", "pn_compare")


class ConfigError(ValueError):
    pass


def _scenario_kwargs(raw: dict[str, Any]) -> dict[str, Any]:
    names = {f.name for f in fields(ScenarioConfig)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown scenario fields {sorted(unknown)}")
    out = dict(raw)
    if "genie_flags" in out:
        out["genie_flags"] = frozenset(out["genie_flags"] or ())
    return out


def _profiles(raw: dict[str, Any]) -> dict[str, TdlProfile]:
    out = {}
    for name, entry in (raw or {}).items():
        try:
            out[name] = TdlProfile.normalized(
                name,
                [d * 1e-9 for d in entry["delays_ns"]],
                entry["powers_db"],
                entry.get("doppler_hz", 0.0),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"profile {name!r} needs delays_ns and powers_db lists") from exc
    return out


def parse_override(text: str) -> tuple[list[str], Any]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    key, value = text.split("=", 1)
    path = key.strip().split(".")
    if len(path) == 1:
        path = ["scenario", *path]
    return path, yaml.safe_load(value)


def load_config(path: str | os.PathLike | None, overrides: Iterable[str] = ()) -> dict[str, Any]:
    """Raw nested config (``scenario``, ``sweep``, ``profiles``) with overrides applied."""
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - {"scenario", "sweep", "profiles"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    for text in overrides:
        keys, value = parse_override(text)
        node = raw
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {text!r} walks into a non-section")
        node[keys[-1]] = value
    return raw


def build_scenario(raw: dict[str, Any]) -> tuple[ScenarioConfig, dict[str, TdlProfile]]:
    try:
        return ScenarioConfig(**_scenario_kwargs(raw.get("scenario") or {})), _profiles(raw.get("profiles"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def build_sweep(raw: dict[str, Any]) -> SweepConfig:
    base, profiles = build_scenario(raw)
    sw = dict(raw.get("sweep") or {})
    unknown = set(sw) - {"axes", "seeds", "output_path"}
    if unknown:
        raise ConfigError(f"unknown sweep fields {sorted(unknown)}")
    axes = dict(sw.get("axes") or {})
    if "genie_flags" in axes:
        axes["genie_flags"] = [frozenset(v or ()) for v in axes["genie_flags"]]
    try:
        sweep = SweepConfig(
            base=base,
            axes=axes,
            seeds=int(sw.get("seeds", 1)),
            output_path=sw.get("output_path"),
            profiles=profiles,
        )
        sweep.points()  # validates every axis value
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return sweep


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def write_results(rows: list[dict[str, Any]], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])


def metadata_path(results_path: str | os.PathLike) -> Path:
    p = Path(results_path)
    return p.with_name(p.stem + ".meta.json")


def write_metadata(raw_config: dict[str, Any], sweep: SweepConfig, errors: list[str], results_path) -> Path:
    meta = {
        "artifact": "pnlink",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": raw_config,
        "n_points": sweep.n_points,
        "seeds": sweep.seeds,
        "errors": errors,
    }
    out = metadata_path(results_path)
    out.write_text(json.dumps(meta, indent=2, default=str) + "\n")
    return out


def read_results(path: str | os.PathLike) -> list[dict[str, Any]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise ConfigError(f"{path} is not a results table (unexpected header)")
        rows = []
        for r in reader:
            for k in ("fc_ghz", "evm_pct", "evm_db", "ber", "bler"):
                r[k] = float(r[k]) if r[k] != "" else math.nan
            for k in ("n_tx", "n_rx", "cpe_comp", "seed", "n_bits", "n_blocks"):
                r[k] = int(r[k])
            r["snr_db"] = float(r["snr_db"]) if r["snr_db"] != "no-noise" else math.inf
            rows.append(r)
        return rows


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def plot_data(rows: list[dict[str, Any]], figure: str) -> tuple[list[str], list[list[Any]]]:
    """Seed-averaged series for one figure; rows with failed runs are skipped."""
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    ok = [r for r in rows if not math.isnan(r["evm_pct"])]
    if figure == "pn_compare":
        keys = ("pn_model", "modulation", "n_tx", "n_rx", "cpe_comp", "snr_db")
        values = ("evm_pct", "bler", "ber")
    else:
        keys = ("pn_model", "modulation", "n_tx", "n_rx", "cpe_comp", "snr_db")
        values = ("evm_pct",) if figure == "evm_vs_snr" else ("bler", "ber")
    groups: dict[tuple, list[dict[str, Any]]] = defaultdict(list)
    for r in ok:
        groups[tuple(r[k] for k in keys)].append(r)
    header = [*keys, *(f"{v}_mean" for v in values)]
    if "evm_pct" in values:
        header.append("evm_db_of_mean")
    header.append("n_seeds")
    out = []
    for key in sorted(groups):
        g = groups[key]
        line: list[Any] = list(key)
        means = {v: _mean([r[v] for r in g]) for v in values}
        line += [means[v] for v in values]
        if "evm_pct" in values:
            pct = means["evm_pct"]
            line.append(20 * math.log10(pct / 100) if pct > 0 else -math.inf)
        line.append(len(g))
        out.append(line)
    return header, out


def write_table(header: list[str], rows: list[list[Any]], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not (isinstance(v, float) and math.isinf(v) and v > 0) else "no-noise" for v in row])
