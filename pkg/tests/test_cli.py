import json
import os

import pytest

from torikam.cli import main
from torikam.fileio import read_series, write_series
from torikam.series import MatrixSeries


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def files_except_provenance(d):
    return {name: (d / name).read_bytes() for name in sorted(os.listdir(d))
            if name != "provenance.json"}


def test_trivialize_preset_ok(tmp_path, capsys):
    code, rec = run(["trivialize", "--preset", "sqrt2", "--out", str(tmp_path)], capsys)
    assert code == 0 and rec["verdict"] == "converged"
    for name in ("provenance.json", "cocycle.series", "report.csv", "phi_inf.series",
                 "summary.json"):
        assert (tmp_path / name).exists()
    prov = json.loads((tmp_path / "provenance.json").read_text())
    assert prov["command"] == "trivialize" and prov["source"] == "preset:sqrt2"
    assert prov["kernel_backend"] in ("cython", "python")


def test_rerun_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["trivialize", "--preset", "elliptic-tau-i", "--out", str(d)]) == 0
    capsys.readouterr()
    assert files_except_provenance(a) == files_except_provenance(b)


def test_seed_override_changes_output(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["synth", "--preset", "golden", "--out", str(a)])
    main(["synth", "--preset", "golden", "--out", str(b), "--seed", "99"])
    capsys.readouterr()
    assert (a / "psi.series").read_bytes() != (b / "psi.series").read_bytes()
    man = json.loads((b / "manifest.json").read_text())
    assert man["seeds"] == [99]


def test_scan_third_root_exits_2(tmp_path, capsys):
    code, rec = run(["scan", "--preset", "third-root", "--out", str(tmp_path)], capsys)
    assert code == 2
    assert rec["error"] == "resonance"
    assert [[0], [4]] in rec["modes"]
    assert json.loads((tmp_path / "error.json").read_text()) == rec


def test_trivialize_resonant_preset_exits_2(tmp_path, capsys):
    code, rec = run(["trivialize", "--preset", "third-root", "--out", str(tmp_path)], capsys)
    assert code == 2 and rec["error"] == "resonance"


def test_scan_golden_ok(tmp_path, capsys):
    code, rec = run(["scan", "--preset", "golden", "--out", str(tmp_path), "--bound", "40"],
                    capsys)
    assert code == 0 and rec["verdict"] == "pass"
    assert (tmp_path / "scan_profile.csv").exists()


def test_bad_config_exits_1(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[lattice]\nn = 1\n")
    code, rec = run(["scan", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 1 and rec["error"] == "config"
    fields = {d["field"] for d in rec["diagnostics"]}
    assert {"lattice.e", "bundle", "truncation"} <= fields


def test_solve_default_and_input(tmp_path, capsys):
    code, rec = run(["solve", "--preset", "golden-2d", "--out", str(tmp_path / "a")], capsys)
    assert code == 0 and rec["coef_residual"] <= 1e-10
    F = read_series(tmp_path / "a" / "rhs.series")
    write_series(tmp_path / "rhs.series", F)
    code, rec2 = run(["solve", "--preset", "golden-2d", "--out", str(tmp_path / "b"),
                      "--input", str(tmp_path / "rhs.series")], capsys)
    assert code == 0 and rec2 == rec


def test_check_roundtrip_and_tamper(tmp_path, capsys):
    run_dir = tmp_path / "run"
    assert main(["trivialize", "--preset", "golden", "--out", str(run_dir)]) == 0
    capsys.readouterr()
    code, rec = run(["check", "--run", str(run_dir)], capsys)
    assert code == 0 and rec["agree"] and rec["verdict"] == "converged"
    # corrupt the stored trivialization
    Phi = read_series(run_dir / "phi_inf.series")[0]
    data = Phi.data.copy()
    data[0, 0, 0, 2] += 1e-3
    write_series(run_dir / "phi_inf.series", [MatrixSeries(Phi.spec, data)])
    code, rec = run(["check", "--run", str(run_dir), "--out", str(tmp_path / "c")], capsys)
    assert code == 2 and rec["error"] == "check-mismatch"


def test_check_rejects_non_trivialize_run(tmp_path, capsys):
    main(["synth", "--preset", "golden", "--out", str(tmp_path)])
    capsys.readouterr()
    code, rec = run(["check", "--run", str(tmp_path)], capsys)
    assert code == 1


def test_missing_input_file_exits_1(tmp_path, capsys):
    code, rec = run(["solve", "--preset", "golden", "--out", str(tmp_path),
                     "--input", str(tmp_path / "missing.series")], capsys)
    assert code == 1 and rec["error"] == "input"


def test_argparse_errors():
    with pytest.raises(SystemExit) as ei:
        main(["scan", "--out", "x"])
    assert ei.value.code == 2  # argparse usage error
