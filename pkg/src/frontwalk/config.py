"""Run configuration files: INI parsing, validation, canonical hashing.

A run file has exactly one problem section ([problem.dimensionless] or
[problem.dimensional]), a [left_boundary] section, a [numerics] section, a
[reference] section and an optional [output] section. Function-valued fields
use a small inline syntax:

* ``constant 1.0``
* ``linear 0.05``                      (sigma only)
* ``table 0:0.0 0.5:0.01 1.0:0.05``   (position:value pairs)

Times in [numerics] snapshot_times are written in the problem's own time
unit (dimensional problems: the unit of t_final; dimensionless problems:
tau). The step sizes ``dtau`` and reference ``dt`` are always dimensionless.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

from .model import (
    DimensionlessProblem,
    ForcingSpec,
    PhysicalParameters,
    ProfileSpec,
    SigmaSpec,
    nondimensionalize,
)
from .reference import ReferenceMesh
from .solver import LeftBoundarySpec, RwmNumerics


class ConfigError(ValueError):
    """A configuration file that parses but does not validate, or fails to
    parse; the message names the offending section, key or line."""


_PROBLEM_DIMLESS = "problem.dimensionless"
_PROBLEM_DIM = "problem.dimensional"

_KNOWN_KEYS = {
    _PROBLEM_DIMLESS: {
        "biot", "thiele", "henry", "h0", "length", "t_final",
        "u0", "forcing", "sigma",
    },
    _PROBLEM_DIM: {
        "diffusivity", "surface_rate", "kinetic_rate", "henry", "s0",
        "m0", "boundary_source", "sigma", "length", "t_final",
        "x_ref", "m_ref",
    },
    "left_boundary": {"kind", "u_value"},
    "numerics": {"dtau", "n", "seed", "snapshot_times", "strict"},
    "reference": {"elements", "dt"},
    "output": {"directory", "precision"},
}


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description.

    ``problem`` is always dimensionless; ``physical`` carries the original
    scales when the file used a dimensional block (None otherwise).
    ``numerics.snapshot_times`` are in tau; ``snapshot_labels`` keeps the
    times as written in the file for naming output files.
    """

    problem: DimensionlessProblem
    physical: PhysicalParameters | None
    left: LeftBoundarySpec
    numerics: RwmNumerics
    reference: ReferenceMesh
    snapshot_labels: tuple[float, ...]
    out_dir: str
    precision: int

    @property
    def time_scale(self) -> float:
        return self.physical.time_scale if self.physical is not None else 1.0

    def resolved(self) -> dict:
        """Canonical dictionary of everything that defines the run."""
        doc = {
            "problem_kind": "dimensional" if self.physical is not None else "dimensionless",
            "problem": self.problem.to_dict(),
            "left": self.left.to_dict(),
            "numerics": self.numerics.to_dict(),
            "snapshot_labels": list(self.snapshot_labels),
            "reference": {"elements": self.reference.elements, "dt": self.reference.dt},
            "precision": self.precision,
        }
        if self.physical is not None:
            doc["physical"] = self.physical.to_dict()
        return doc

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def with_overrides(
        self,
        seed: int | None = None,
        out_dir: str | None = None,
        strict: bool | None = None,
    ) -> "RunConfig":
        numerics = self.numerics
        if seed is not None:
            numerics = replace(numerics, seed=seed)
        if strict is not None:
            numerics = replace(numerics, strict=strict)
        return replace(
            self,
            numerics=numerics,
            out_dir=self.out_dir if out_dir is None else out_dir,
        )


def _fail(section: str, key: str, detail: str) -> ConfigError:
    return ConfigError(f"[{section}] {key}: {detail}")


def _get_float(section: str, items: dict[str, str], key: str) -> float:
    if key not in items:
        raise _fail(section, key, "missing required value")
    raw = items[key]
    try:
        return float(raw)
    except ValueError:
        raise _fail(section, key, f"not a number: {raw!r}") from None


def _get_int(section: str, items: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in items:
        if default is not None:
            return default
        raise _fail(section, key, "missing required value")
    raw = items[key]
    try:
        return int(raw)
    except ValueError:
        raise _fail(section, key, f"not an integer: {raw!r}") from None


def _get_bool(section: str, items: dict[str, str], key: str, default: bool) -> bool:
    if key not in items:
        return default
    raw = items[key].strip().lower()
    if raw in ("true", "yes", "on", "1"):
        return True
    if raw in ("false", "no", "off", "0"):
        return False
    raise _fail(section, key, f"not a boolean: {items[key]!r}")


def _parse_pairs(section: str, key: str, tokens: list[str]) -> tuple[tuple[float, ...], tuple[float, ...]]:
    xs: list[float] = []
    ys: list[float] = []
    for tok in tokens:
        left, sep, right = tok.partition(":")
        if not sep:
            raise _fail(section, key, f"table entries are x:y pairs, got {tok!r}")
        try:
            xs.append(float(left))
            ys.append(float(right))
        except ValueError:
            raise _fail(section, key, f"bad table pair {tok!r}") from None
    return tuple(xs), tuple(ys)


def _parse_sigma(section: str, items: dict[str, str], key: str = "sigma") -> SigmaSpec:
    if key not in items:
        raise _fail(section, key, "missing required value")
    tokens = items[key].split()
    kind = tokens[0] if tokens else ""
    try:
        if kind == "linear" and len(tokens) == 2:
            return SigmaSpec("linear", float(tokens[1]))
        if kind == "table" and len(tokens) >= 3:
            xs, ys = _parse_pairs(section, key, tokens[1:])
            return SigmaSpec("table", positions=xs, values=ys)
    except ConfigError:
        raise
    except ValueError as exc:
        raise _fail(section, key, str(exc)) from None
    raise _fail(section, key, f"expected 'linear <coeff>' or 'table x:y ...', got {items[key]!r}")


def _parse_profile(section: str, items: dict[str, str], key: str) -> ProfileSpec:
    if key not in items:
        raise _fail(section, key, "missing required value")
    tokens = items[key].split()
    kind = tokens[0] if tokens else ""
    try:
        if kind == "constant" and len(tokens) == 2:
            return ProfileSpec("constant", float(tokens[1]))
        if kind == "table" and len(tokens) >= 3:
            xs, ys = _parse_pairs(section, key, tokens[1:])
            return ProfileSpec("table", positions=xs, values=ys)
    except ConfigError:
        raise
    except ValueError as exc:
        raise _fail(section, key, str(exc)) from None
    raise _fail(section, key, f"expected 'constant <v>' or 'table x:y ...', got {items[key]!r}")


def _parse_forcing(section: str, items: dict[str, str], key: str) -> ForcingSpec:
    if key not in items:
        raise _fail(section, key, "missing required value")
    tokens = items[key].split()
    kind = tokens[0] if tokens else ""
    try:
        if kind == "constant" and len(tokens) == 2:
            return ForcingSpec("constant", float(tokens[1]))
        if kind == "table" and len(tokens) >= 2:
            xs, ys = _parse_pairs(section, key, tokens[1:])
            return ForcingSpec("table", times=xs, values=ys)
    except ConfigError:
        raise
    except ValueError as exc:
        raise _fail(section, key, str(exc)) from None
    raise _fail(section, key, f"expected 'constant <v>' or 'table t:v ...', got {items[key]!r}")


def _section_items(parser: configparser.ConfigParser, name: str) -> dict[str, str]:
    items = dict(parser.items(name))
    unknown = set(items) - _KNOWN_KEYS[name]
    if unknown:
        raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(unknown))}")
    return items


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run file.

    Raises ConfigError for syntax problems (with the line number reported by
    the INI parser) and for semantic problems (naming the section and key).
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    sections = set(parser.sections())
    unknown = sections - set(_KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    problem_sections = sections & {_PROBLEM_DIMLESS, _PROBLEM_DIM}
    if len(problem_sections) != 1:
        raise ConfigError(
            f"exactly one of [{_PROBLEM_DIMLESS}] or [{_PROBLEM_DIM}] is required, "
            f"found {len(problem_sections)}"
        )
    for required in ("left_boundary", "numerics", "reference"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")

    physical: PhysicalParameters | None = None
    try:
        if _PROBLEM_DIM in problem_sections:
            sec = _PROBLEM_DIM
            items = _section_items(parser, sec)
            physical = PhysicalParameters(
                diffusivity=_get_float(sec, items, "diffusivity"),
                surface_rate=_get_float(sec, items, "surface_rate"),
                kinetic_rate=_get_float(sec, items, "kinetic_rate"),
                henry=_get_float(sec, items, "henry"),
                s0=_get_float(sec, items, "s0"),
                m0=_parse_profile(sec, items, "m0"),
                boundary_source=_parse_forcing(sec, items, "boundary_source"),
                sigma=_parse_sigma(sec, items),
                length=_get_float(sec, items, "length"),
                t_final=_get_float(sec, items, "t_final"),
                x_ref=_get_float(sec, items, "x_ref"),
                m_ref=_get_float(sec, items, "m_ref"),
            )
            problem = nondimensionalize(physical)
        else:
            sec = _PROBLEM_DIMLESS
            items = _section_items(parser, sec)
            problem = DimensionlessProblem(
                biot=_get_float(sec, items, "biot"),
                thiele=_get_float(sec, items, "thiele"),
                henry=_get_float(sec, items, "henry"),
                h0=_get_float(sec, items, "h0"),
                length=_get_float(sec, items, "length"),
                t_final=_get_float(sec, items, "t_final"),
                u0=_parse_profile(sec, items, "u0"),
                forcing=_parse_forcing(sec, items, "forcing"),
                sigma_tilde=_parse_sigma(sec, items),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {exc}") from None

    lb = _section_items(parser, "left_boundary")
    kind = lb.get("kind", "").strip().lower()
    if kind == "dirichlet":
        left = LeftBoundarySpec("dirichlet", _get_float("left_boundary", lb, "u_value"))
    elif kind == "robin":
        if "u_value" in lb:
            raise _fail("left_boundary", "u_value", "not used with kind = robin")
        left = LeftBoundarySpec("robin")
    else:
        raise _fail("left_boundary", "kind", f"must be 'dirichlet' or 'robin', got {lb.get('kind')!r}")

    num = _section_items(parser, "numerics")
    dtau = _get_float("numerics", num, "dtau")
    n = _get_int("numerics", num, "n")
    seed = _get_int("numerics", num, "seed", default=0)
    strict = _get_bool("numerics", num, "strict", default=False)
    labels: list[float] = []
    if num.get("snapshot_times", "").strip():
        for tok in num["snapshot_times"].split():
            try:
                labels.append(float(tok))
            except ValueError:
                raise _fail("numerics", "snapshot_times", f"not a number: {tok!r}") from None
    time_scale = physical.time_scale if physical is not None else 1.0
    t_max = physical.t_final if physical is not None else problem.t_final
    for t in labels:
        if not 0.0 <= t <= t_max:
            raise _fail("numerics", "snapshot_times", f"time {t!r} outside [0, {t_max!r}]")
    snapshot_taus = tuple(t / time_scale for t in labels)

    ref_items = _section_items(parser, "reference")
    try:
        mesh = ReferenceMesh(
            elements=_get_int("reference", ref_items, "elements"),
            dt=_get_float("reference", ref_items, "dt"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[reference] {exc}") from None

    out_items = _section_items(parser, "output") if "output" in sections else {}
    out_dir = out_items.get("directory", "runs/" + path.stem)
    precision = _get_int("output", out_items, "precision", default=17)
    if not 1 <= precision <= 17:
        raise _fail("output", "precision", f"must be in [1, 17], got {precision}")

    try:
        numerics = RwmNumerics(
            dtau=dtau, n=n, seed=seed, snapshot_times=snapshot_taus, strict=strict
        )
    except ValueError as exc:
        raise ConfigError(f"[numerics] {exc}") from None

    return RunConfig(
        problem=problem,
        physical=physical,
        left=left,
        numerics=numerics,
        reference=mesh,
        snapshot_labels=tuple(labels),
        out_dir=out_dir,
        precision=precision,
    )
