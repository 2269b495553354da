import io
import json

import pytest

from finitegauge import cli
from finitegauge.spectra import SolverError


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def _body(text):
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


def test_physdim_three_by_three():
    code, text = run("physdim", "--group", "D4", "--lattice", "3x3", "--periodic")
    assert code == 0
    assert _body(text) == ["group,lattice,L,V,dim_phys", "D4,3x3 periodic,18,9,269221888"]


def test_electric_gamma2_rows():
    code, text = run("electric", "--gamma", "gamma2", "--check-laplacian")
    assert code == 0
    assert _body(text) == ["j,dim,f", "0,1,0", "1,1,8", "2,1,8", "3,1,8", "4,2,6"]
    assert "# laplacian_multiset_match: true" in text


def test_metadata_block_present():
    _, text = run("electric", "--gamma", "gamma1")
    meta = dict(ln[2:].split(": ", 1) for ln in text.splitlines() if ln.startswith("# "))
    for key in ("tool", "version", "config_hash", "seed", "tol"):
        assert key in meta


def test_group_info_symmetric():
    code, text = run("group", "info", "--group", "S5")
    assert code == 0
    assert "order 120" in text
    assert any("cycle_type=5 " in ln and "size=24" in ln for ln in text.splitlines())


def test_config_error_exit_code(capsys):
    code, _ = run("electric", "--gamma", "gamma9")
    assert code == 1
    assert "gamma" in capsys.readouterr().err
    code, _ = run("electric", "--elements", "r")
    assert code == 1
    code, _ = run("physdim", "--group", "Q8")
    assert code == 1


def test_config_file(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[group]\nfamily = "cyclic"\nn = 3\n[gamma]\nelements = ["x", "x2"]\n[lattice]\nextents = [2, 2]\nperiodic = true\n')
    code, text = run("physdim", "-c", str(cfg))
    assert code == 0 and _body(text)[1] == "Z3,2x2 periodic,8,4,243"
    code, text = run("electric", "-c", str(cfg))
    assert _body(text)[1:] == ["0,1,0", "1,1,3", "2,1,3"]


def test_sweep_is_byte_identical(tmp_path):
    args = ("sweep", "--open", "--points", "11")
    assert run(*args, "-o", str(tmp_path / "a.csv"))[0] == 0
    assert run(*args, "-o", str(tmp_path / "b.csv"))[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    rows = _body((tmp_path / "a.csv").read_text())
    assert rows[0] == "lambda,E0,gap,expHE,expHB,chi,degeneracy" and len(rows) == 12
    summary = json.loads((tmp_path / "a.json").read_text())
    assert set(summary["transition_points"]) == {"electric", "magnetic", "fidelity"}


def test_failed_sweep_leaves_no_output(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise SolverError("forced failure")

    monkeypatch.setattr(cli, "sweep", boom)
    code, _ = run("sweep", "--open", "--points", "5", "-o", str(tmp_path / "s.csv"))
    assert code == 2 and "forced failure" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_partial_outputs_removed(tmp_path, monkeypatch):
    real = cli.write_atomic

    def flaky(path, text):
        if str(path).endswith(".json"):
            raise OSError("disk full")
        return real(path, text)

    monkeypatch.setattr(cli, "write_atomic", flaky)
    with pytest.raises(OSError):
        run("sweep", "--open", "--points", "5", "--no-fidelity", "-o", str(tmp_path / "s.csv"))
    assert list(tmp_path.iterdir()) == []


def test_basis_and_hamiltonian_build(tmp_path):
    code, text = run("basis", "build", "--open", "-o", str(tmp_path / "b.npz"))
    assert code == 0 and "states 5" in text
    code, text = run("hamiltonian", "build", "--open", "--lambda", "0.5", "-o", str(tmp_path / "h.txt"))
    assert code == 0
    content = (tmp_path / "h.txt").read_text()
    assert "# lambda: 0.5" in content
    assert _body(content)[0] == "5 12"
    assert run("hamiltonian", "build", "--open", "--lambda", "2")[0] == 1


def test_cached_basis_is_used(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'[lattice]\nextents = [2, 2]\nperiodic = false\n[output]\ndir = "{tmp_path}"\ncache = "b.npz"\n')
    assert run("basis", "build", "-c", str(cfg))[0] == 0
    assert (tmp_path / "b.npz").exists()
    code, _ = run("hamiltonian", "build", "-c", str(cfg), "--lambda", "0.2")
    assert code == 0 and (tmp_path / "hamiltonian.txt").exists()
    # a cache for another lattice is stale: numerical/consistency failure
    code, _ = run("hamiltonian", "build", "-c", str(cfg), "--lattice", "2x3")
    assert code == 2


def test_oracle_check_subset():
    code, text = run("oracle", "check", "--lams", "0.5")
    assert code == 0
    assert text.strip().endswith("checks passed")
    assert "FAIL" not in text
