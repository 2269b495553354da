"""Command-line entry point: ``finitegauge <subcommand>``.

Exit status 0 on success, 1 for configuration errors, 2 for numerical or
consistency failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, _kernels
from .cache import CacheError, load_basis, save_basis
from .config import ConfigError, RunConfig, load_config, parse_extents, parse_group_name
from .electric import cayley_laplacian, electric_levels
from .group import GroupTableError, cycle_type, generated_subgroup, generators
from .hamiltonian import HamiltonianError, build_hamiltonian, write_coordinate_text
from .lattice import LatticeError
from .oracle import OracleError
from .spectra import SolverError, sweep, transition_points
from .spin_network import BasisError, enumerate_basis, physical_dimension

logger = logging.getLogger("finitegauge")

NUMERIC_ERRORS = (
    ArithmeticError,
    BasisError,
    CacheError,
    HamiltonianError,
    OracleError,
    SolverError,
    MemoryError,
)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def metadata(cfg: RunConfig, **extra) -> dict:
    """Self-describing block embedded in every artifact (no timestamps)."""
    opt = cfg.data["solver"]
    meta = {
        "tool": "finitegauge",
        "version": __version__,
        "config_hash": cfg.hash(),
        "group": _group_label(cfg),
        "backend": _kernels.backend(),
        "seed": opt.get("seed", cfg.solver_options().seed),
        "tol": opt.get("tol", cfg.solver_options().tol),
    }
    meta.update(extra)
    return meta


def _group_label(cfg: RunConfig) -> str:
    sec = cfg.data["group"]
    if "table" in sec:
        return f"table:{Path(sec['table']).name}"
    letter = {"cyclic": "Z", "dihedral": "D", "symmetric": "S"}.get(sec.get("family"), "?")
    return f"{letter}{sec.get('n')}"


def _comment_block(meta: dict) -> str:
    return "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in meta.items())


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    return f"{x:.12e}"


def write_atomic(path: Path, text: str) -> Path:
    """Write via a temporary file so a failure never leaves partial output."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _emit(text: str, path: Path | None, out) -> None:
    if path is None:
        out.write(text)
    else:
        write_atomic(path, text)
        out.write(f"wrote {path}\n")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_group_info(cfg: RunConfig, args, out) -> int:
    G = cfg.group()
    lines = [_comment_block(metadata(cfg))]
    lines.append(f"order {G.order}\n")
    lines.append(f"abelian {str(G.is_abelian).lower()}\n")
    lines.append(f"generators {' '.join(G.names[g] for g in generators(G))}\n")
    lines.append(f"classes {len(G.classes)}\n")
    for i, c in enumerate(G.classes):
        extra = ""
        if G.family and G.family[0] == "symmetric":
            perm = [int(ch) - 1 for ch in G.names[c[0]]] if G.names[c[0]] != "e" else list(range(G.family[1]))
            extra = f" cycle_type={'+'.join(map(str, cycle_type(perm)))}"
        lines.append(f"class {i} size={len(c)} order={G.element_order(c[0])}{extra} members={','.join(G.names[g] for g in c)}\n")
    _emit("".join(lines), args.output, out)
    return 0


def cmd_electric(cfg: RunConfig, args, out) -> int:
    G, S, gamma = cfg.group(), cfg.irreps(), cfg.gamma()
    spec = electric_levels(G, gamma, S)
    buf = io.StringIO()
    buf.write(_comment_block(metadata(cfg, gamma=gamma.names(), provenance=gamma.provenance.value)))
    buf.write(f"# ground_degeneracy: {spec.degeneracy}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "dim", "f"])
    for j, d, f in spec.rows():
        w.writerow([j, d, _fmt_energy(f)])
    if args.check_laplacian:
        ev = np.linalg.eigvalsh(cayley_laplacian(G, gamma))
        ok = np.allclose(ev, spec.multiset(), atol=1e-9)
        buf.write(f"# laplacian_multiset_match: {str(ok).lower()}\n")
        if not ok:
            _emit(buf.getvalue(), args.output, out)
            return 2
    _emit(buf.getvalue(), args.output, out)
    return 0


def _fmt_energy(f: float) -> str:
    r = round(f)
    return str(int(r)) if abs(f - r) < 1e-12 else repr(float(f))


def cmd_physdim(cfg: RunConfig, args, out) -> int:
    G, lat = cfg.group(), cfg.lattice()
    dim = physical_dimension(G, lat.n_links, lat.n_sites)
    buf = io.StringIO()
    buf.write(_comment_block(metadata(cfg)))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "lattice", "L", "V", "dim_phys"])
    w.writerow([_group_label(cfg), lat.describe(), lat.n_links, lat.n_sites, dim])
    _emit(buf.getvalue(), args.output, out)
    return 0


def _basis(cfg: RunConfig, use_cache: bool = True):
    S, lat = cfg.irreps(), cfg.lattice()
    path = cfg.data["output"].get("cache")
    if use_cache and path:
        p = cfg.output_path("cache", path)
        if p.exists():
            return load_basis(p, S, lat)
    return enumerate_basis(S, lat, cap=cfg.state_cap())


def cmd_basis_build(cfg: RunConfig, args, out) -> int:
    basis = enumerate_basis(cfg.irreps(), cfg.lattice(), cap=cfg.state_cap())
    path = args.output or cfg.output_path("cache", cfg.data["output"].get("cache", "basis.npz"))
    save_basis(path, basis)
    out.write(f"states {len(basis)} assignments {len(basis.assignments)} signatures {len(basis.tensors)}\n")
    out.write(f"wrote {path}\n")
    return 0


def cmd_hamiltonian_build(cfg: RunConfig, args, out) -> int:
    lam = args.lam
    if not 0 <= lam <= 1:
        raise ConfigError("lambda", f"must lie in [0, 1], got {lam}")
    G, S, gamma, hB = cfg.group(), cfg.irreps(), cfg.gamma(), cfg.class_function()
    basis = _basis(cfg)
    H = build_hamiltonian(basis, electric_levels(G, gamma, S), hB)
    meta = metadata(
        cfg,
        gamma=gamma.names(),
        magnetic_coefficients={str(j): [c.real, c.imag] for j, c in hB.active()},
        **{"lambda": lam, "states": H.n, "magnetic_nonzero_fraction": H.nonzero_fraction()},
    )
    header = [f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in meta.items()]
    path = args.output or cfg.output_path("matrix", "hamiltonian.txt")
    write_atomic(Path(path), write_coordinate_text(H, lam, header))
    out.write(f"states {H.n} magnetic_nnz {H.magnetic_nnz()} fraction {H.nonzero_fraction():.6f}\n")
    out.write(f"wrote {path}\n")
    return 0


def cmd_sweep(cfg: RunConfig, args, out) -> int:
    G, S, gamma, hB = cfg.group(), cfg.irreps(), cfg.gamma(), cfg.class_function()
    grid = cfg.grid()
    opt = cfg.solver_options()
    basis = _basis(cfg)
    H = build_hamiltonian(basis, electric_levels(G, gamma, S), hB)
    progress = None
    if args.verbose:
        progress = lambda i, n: print(f"  {i}/{n}", file=sys.stderr)  # noqa: E731
    records = sweep(H, grid, opt, fidelity=not args.no_fidelity, progress=progress)
    meta = metadata(
        cfg,
        gamma=gamma.names(),
        magnetic_coefficients={str(j): [c.real, c.imag] for j, c in hB.active()},
        grid={"points": len(grid), "min": float(grid[0]), "max": float(grid[-1])},
        epsilon=opt.epsilon,
        cluster_tol=opt.cluster_tol,
        states=H.n,
    )
    buf = io.StringIO()
    buf.write(_comment_block(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "E0", "gap", "expHE", "expHB", "chi", "degeneracy"])
    for r in records:
        w.writerow([_fmt(v) for v in r.row()])
    csv_path = args.output or cfg.output_path("csv", "sweep.csv")
    json_path = Path(csv_path).with_suffix(".json")
    summary = {"metadata": meta, "transition_points": {}}
    if len(records) >= 5:
        for name, est in transition_points(records).items():
            summary["transition_points"][name] = {
                "lambda": None if est.lam is None else round(est.lam, 10),
                "uncertainty": round(est.uncertainty, 10),
            }
    summary["degenerate_points"] = [round(r.lam, 10) for r in records if r.degeneracy > 1]
    summary["chi_warnings"] = [round(r.lam, 10) for r in records if r.chi_warning]
    write_atomic(Path(csv_path), buf.getvalue())
    try:
        write_atomic(json_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except BaseException:
        Path(csv_path).unlink(missing_ok=True)
        raise
    out.write(f"wrote {csv_path}\nwrote {json_path}\n")
    for name, tp in summary["transition_points"].items():
        out.write(f"lambda*[{name}] = {tp['lambda']}\n")
    return 0


def cmd_oracle_check(cfg: RunConfig, args, out) -> int:
    from .oracle_check import run_oracle_checks

    rows = run_oracle_checks(lams=args.lams)
    width = max(len(r["case"]) for r in rows)
    out.write(f"{'case'.ljust(width)}  {'check':<22} {'value':>12}  status\n")
    failed = 0
    for r in rows:
        status = "PASS" if r["ok"] else "FAIL"
        failed += not r["ok"]
        out.write(f"{r['case'].ljust(width)}  {r['check']:<22} {r['value']:>12.3e}  {status}\n")
    out.write(f"{len(rows) - failed}/{len(rows)} checks passed\n")
    return 0 if failed == 0 else 2


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", type=Path, help="TOML run configuration")
    p.add_argument("--group", help="group name such as Z4, D4 or S5 (overrides [group])")
    p.add_argument("--gamma", help="named generating set, e.g. gamma2 (overrides [gamma])")
    p.add_argument("--elements", help="comma-separated generating set elements (overrides [gamma])")
    p.add_argument("--lattice", help="hypercubic extents such as 2x2 (overrides [lattice])")
    bc = p.add_mutually_exclusive_group()
    bc.add_argument("--periodic", dest="periodic", action="store_true", default=None)
    bc.add_argument("--open", dest="periodic", action="store_false")
    p.add_argument("-o", "--output", type=Path, help="output file (default: stdout or the [output] setting)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finitegauge", description="Finite-group lattice gauge theory toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable, help: str, parent=sub):
        p = parent.add_parser(name, help=help)
        _common(p)
        p.set_defaults(func=func)
        return p

    grp = sub.add_parser("group", help="group utilities").add_subparsers(dest="action", required=True)
    add("info", cmd_group_info, "order, classes and generators", grp)
    p = add("electric", cmd_electric, "electric energies f(j) as CSV")
    p.add_argument("--check-laplacian", action="store_true", help="cross-check against the Cayley Laplacian")
    add("physdim", cmd_physdim, "dimension of the gauge-invariant subspace")
    bas = sub.add_parser("basis", help="spin-network basis").add_subparsers(dest="action", required=True)
    add("build", cmd_basis_build, "enumerate and write the basis cache", bas)
    ham = sub.add_parser("hamiltonian", help="Hamiltonian matrix").add_subparsers(dest="action", required=True)
    p = add("build", cmd_hamiltonian_build, "write H(lambda) in coordinate text format", ham)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p = add("sweep", cmd_sweep, "ground-state observables across lambda")
    p.add_argument("--points", type=int, help="uniform grid size (overrides [sweep])")
    p.add_argument("--no-fidelity", action="store_true", help="skip the fidelity susceptibility")
    orc = sub.add_parser("oracle", help="brute-force cross-checks").add_subparsers(dest="action", required=True)
    p = add("check", cmd_oracle_check, "compare against the full group-element basis", orc)
    p.add_argument("--lams", type=float, nargs="+", default=[0.0, 0.3, 0.5, 0.7, 1.0])
    return parser


def _configure(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig.from_dict({})
    over: dict[str, dict] = {}
    if args.group:
        over["group"] = parse_group_name(args.group)
    if args.gamma:
        over["gamma"] = {"preset": args.gamma}
    if args.elements:
        over["gamma"] = {"elements": [e.strip() for e in args.elements.split(",") if e.strip()]}
    if args.lattice:
        over.setdefault("lattice", {})["extents"] = parse_extents(args.lattice)
    if args.periodic is not None:
        over.setdefault("lattice", {})["periodic"] = args.periodic
    if getattr(args, "points", None):
        over["sweep"] = {"points": args.points, "grid": None}
    cfg = cfg.with_overrides(over) if over else cfg
    if getattr(args, "points", None):
        cfg.data["sweep"].pop("grid", None)
    return cfg


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _configure(args)
        return args.func(cfg, args, out)
    except (ConfigError, GroupTableError, LatticeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
