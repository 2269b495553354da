"""Run configuration: TOML sections resolved into library objects."""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .electric import GammaError, GammaSet, gamma_preset, transfer_matrix_gamma, validate_gamma
from .group import GroupTable, GroupTableError, build_cyclic, build_dihedral, build_symmetric, load_group_table
from .hamiltonian import ClassFunction, HamiltonianError, class_function
from .lattice import LatticeError, LatticeGraph, hypercubic, load_graph
from .representation import IrrepSet, RepresentationError, builtin_irreps, load_irreps
from .spectra import SolverOptions, default_grid, refined_grid

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config", "parse_group_name", "parse_extents"]

DEFAULTS: dict[str, dict[str, Any]] = {
    "group": {"family": "dihedral", "n": 4},
    "irreps": {"source": "builtin"},
    "gamma": {"preset": "gamma1"},
    "lattice": {"extents": [2, 2], "periodic": True},
    "hamiltonian": {"coefficients": {"4": -2.0}},
    "solver": {},
    "sweep": {"points": 101, "refine": False},
    "output": {"dir": "."},
}

SECTIONS = tuple(DEFAULTS)


class ConfigError(ValueError):
    """Configuration problem; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def parse_group_name(name: str) -> dict:
    """'D4' -> dihedral 4, 'Z3' -> cyclic 3, 'S5' -> symmetric 5."""
    name = name.strip()
    kinds = {"Z": "cyclic", "C": "cyclic", "D": "dihedral", "S": "symmetric"}
    if len(name) >= 2 and name[0].upper() in kinds and name[1:].isdigit():
        return {"family": kinds[name[0].upper()], "n": int(name[1:])}
    raise ConfigError("group", f"cannot parse group name {name!r} (use e.g. Z4, D4, S5)")


def parse_extents(text: str) -> list[int]:
    try:
        return [int(v) for v in text.lower().split("x")]
    except ValueError:
        raise ConfigError("lattice.extents", f"cannot parse {text!r} (use e.g. 2x2)") from None


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for sec, vals in extra.items():
        if sec not in SECTIONS:
            raise ConfigError(sec, f"unknown section (expected one of {', '.join(SECTIONS)})")
        if not isinstance(vals, dict):
            raise ConfigError(sec, "section must be a table")
        out[sec] = {**out.get(sec, {}), **vals}
    return out


@dataclass
class RunConfig:
    data: dict
    base_dir: Path = field(default_factory=Path.cwd)

    # caches for resolved objects
    _group: GroupTable | None = field(default=None, repr=False)
    _irreps: IrrepSet | None = field(default=None, repr=False)

    @classmethod
    def from_dict(cls, data: dict | None = None, base_dir: Path | str | None = None) -> "RunConfig":
        merged = _merge(DEFAULTS, data or {})
        return cls(merged, Path(base_dir) if base_dir else Path.cwd())

    def with_overrides(self, overrides: dict[str, dict]) -> "RunConfig":
        """New config with fields replaced (None values ignored).

        Choosing a group, gamma or lattice source drops the alternative keys
        of that section so the override wins.
        """
        data = copy.deepcopy(self.data)
        exclusive = {
            "group": ("family", "n", "table"),
            "gamma": ("preset", "elements", "transfer_irrep"),
            "lattice": ("extents", "graph"),
        }
        for section, values in overrides.items():
            values = {k: v for k, v in values.items() if v is not None}
            if section not in SECTIONS:
                raise ConfigError(section, "unknown section")
            if section in exclusive and any(k in exclusive[section] for k in values):
                for k in exclusive[section]:
                    data[section].pop(k, None)
            data[section].update(values)
        return RunConfig(data, self.base_dir)

    def _path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    # ------------------------------------------------------------------
    def validate(self, parts: tuple[str, ...] = SECTIONS) -> None:
        """Resolve the named sections so errors surface before any work."""
        resolvers = {
            "group": self.group,
            "irreps": self.irreps,
            "gamma": self.gamma,
            "lattice": self.lattice,
            "hamiltonian": self.class_function,
            "solver": self.solver_options,
            "sweep": self.grid,
            "output": self.output_dir,
        }
        for part in parts:
            resolvers[part]()

    def hash(self) -> str:
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def group(self) -> GroupTable:
        if self._group is None:
            sec = self.data["group"]
            try:
                if "table" in sec:
                    self._group = load_group_table(self._path(sec["table"]).read_text())
                else:
                    fam, n = sec.get("family"), sec.get("n")
                    if not isinstance(n, int) or n < 1:
                        raise ConfigError("group.n", f"must be a positive integer, got {n!r}")
                    builders = {"cyclic": build_cyclic, "dihedral": build_dihedral, "symmetric": build_symmetric}
                    if fam not in builders:
                        raise ConfigError("group.family", f"unknown family {fam!r} (cyclic, dihedral, symmetric)")
                    self._group = builders[fam](n)
            except (GroupTableError, OSError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError("group", str(exc)) from exc
        return self._group

    def irreps(self) -> IrrepSet:
        if self._irreps is None:
            sec = self.data["irreps"]
            G = self.group()
            try:
                if "file" in sec:
                    self._irreps = load_irreps(self._path(sec["file"]).read_text(), G)
                elif sec.get("source", "builtin") == "builtin":
                    self._irreps = builtin_irreps(G)
                else:
                    raise ConfigError("irreps.source", f"unknown source {sec.get('source')!r}")
            except NotImplementedError as exc:
                raise ConfigError("irreps", str(exc)) from exc
            except (RepresentationError, OSError) as exc:
                raise ConfigError("irreps.file", str(exc)) from exc
        return self._irreps

    def gamma(self) -> GammaSet:
        sec = self.data["gamma"]
        G = self.group()
        try:
            if "elements" in sec:
                return validate_gamma(G, sec["elements"])
            if "transfer_irrep" in sec:
                j = int(sec["transfer_irrep"])
                S = self.irreps()
                if not 0 <= j < len(S):
                    raise ConfigError("gamma.transfer_irrep", f"irrep {j} does not exist")
                return transfer_matrix_gamma(G, S[j])
            if "preset" in sec:
                return gamma_preset(G, sec["preset"])
        except GammaError as exc:
            raise ConfigError("gamma", str(exc)) from exc
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("gamma", str(exc.args[0]) if exc.args else str(exc)) from exc
        raise ConfigError("gamma", "give one of preset, elements, transfer_irrep")

    def lattice(self) -> LatticeGraph:
        sec = self.data["lattice"]
        try:
            if "graph" in sec:
                return load_graph(self._path(sec["graph"]).read_text())
            ext = sec.get("extents")
            if isinstance(ext, str):
                ext = parse_extents(ext)
            if not isinstance(ext, list) or not ext:
                raise ConfigError("lattice.extents", "must be a non-empty list of integers")
            return hypercubic(ext, sec.get("periodic", False))
        except LatticeError as exc:
            raise ConfigError("lattice", str(exc)) from exc
        except OSError as exc:
            raise ConfigError("lattice.graph", str(exc)) from exc

    def coefficients(self) -> dict[int, complex]:
        raw = self.data["hamiltonian"].get("coefficients", {})
        if isinstance(raw, list):
            return {j: complex(v) for j, v in enumerate(raw) if v != 0}
        out = {}
        for k, v in raw.items():
            try:
                out[int(k)] = complex(v) if not isinstance(v, list) else complex(v[0], v[1])
            except (TypeError, ValueError):
                raise ConfigError(f"hamiltonian.coefficients.{k}", f"not a number: {v!r}") from None
        return out

    def class_function(self) -> ClassFunction:
        S = self.irreps()
        coeffs = self.coefficients()
        bad = [j for j in coeffs if not 0 <= j < len(S)]
        if bad:
            raise ConfigError("hamiltonian.coefficients", f"irreps {bad} do not exist")
        try:
            return class_function(S, coeffs)
        except HamiltonianError as exc:
            raise ConfigError("hamiltonian.coefficients", str(exc)) from exc

    def solver_options(self) -> SolverOptions:
        sec = dict(self.data["solver"])
        allowed = set(SolverOptions.__dataclass_fields__) | {"state_cap"}
        unknown = set(sec) - allowed
        if unknown:
            raise ConfigError("solver", f"unknown keys {sorted(unknown)}")
        sec.pop("state_cap", None)
        if sec.get("method", "auto") not in ("auto", "dense", "lanczos"):
            raise ConfigError("solver.method", "must be auto, dense or lanczos")
        try:
            return SolverOptions(**sec)
        except TypeError as exc:
            raise ConfigError("solver", str(exc)) from exc

    def state_cap(self) -> int:
        return int(self.data["solver"].get("state_cap", 10_000_000))

    def grid(self) -> np.ndarray:
        sec = self.data["sweep"]
        if "grid" in sec:
            g = np.asarray(sec["grid"], dtype=float)
        else:
            pts = int(sec.get("points", 101))
            if pts < 2:
                raise ConfigError("sweep.points", "need at least two points")
            g = refined_grid(pts) if sec.get("refine") else default_grid(pts)
        if g.ndim != 1 or len(g) == 0 or np.any(np.diff(g) < 0) or g[0] < 0 or g[-1] > 1:
            raise ConfigError("sweep.grid", "must be sorted values inside [0, 1]")
        return g

    def output_dir(self) -> Path:
        return self._path(self.data["output"].get("dir", "."))

    def output_path(self, key: str, default: str) -> Path:
        return self.output_dir() / self.data["output"].get(key, default)


def load_config(source: str | Path | None = None, text: str | None = None) -> RunConfig:
    """Read a TOML file (or text); missing sections take defaults."""
    if source is None and text is None:
        return RunConfig.from_dict({})
    base = None
    if text is None:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError("config", str(exc)) from exc
        base = path.parent
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML: {exc}") from exc
    return RunConfig.from_dict(data, base)
