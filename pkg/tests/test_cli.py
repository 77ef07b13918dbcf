"""CLI surface: commands, exit codes, determinism, seed handling."""

import hashlib
import json
from pathlib import Path

import numpy as np

from popdiff.cli import main


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def test_construct_model_and_scan(tmp_path):
    out = tmp_path / "g"
    assert main(["construct", "--kind", "model", "--alpha", "0.25", "--n", "101",
                 "--out", str(out), "--seed", "7"]) == 0
    assert main(["scan", "--in", f"{out}.fn.json", "--out", str(tmp_path / "scan")]) == 0
    summary = json.loads((tmp_path / "scan.summary.json").read_text())
    assert abs(summary["total_3ap_density"] - 31 / 2048) < 1e-9
    lines = (tmp_path / "scan.csv").read_text().strip().split("\n")
    assert lines[0] == "d,density" and len(lines) == 102
    # rescan reproduces the spectrum-level constants
    assert abs(summary["mean"] - 0.25) < 1e-12


def test_scan_constant_rows(tmp_path):
    from popdiff.domains import DensityFn, cyclic, save_fn

    save_fn(DensityFn(cyclic(7), np.full(7, 0.3)), tmp_path / "c.json")
    assert main(["scan", "--in", str(tmp_path / "c.json"), "--out", str(tmp_path / "c")]) == 0
    rows = (tmp_path / "c.csv").read_text().strip().split("\n")[1:]
    assert all(abs(float(r.split(",")[1]) - 0.3**3) < 1e-12 for r in rows)


def test_construct_behrend(tmp_path):
    out = tmp_path / "b"
    assert main(["construct", "--kind", "behrend", "--n", "27", "--out", str(out)]) == 0
    obj = json.loads(Path(f"{out}.set.json").read_text())
    els = obj["elements"]
    eset = set(els)
    for a in els:
        for c in els:
            if a < c and (a + c) % 2 == 0:
                assert (a + c) // 2 not in eset or (a + c) // 2 in (a, c)


def test_construct_product_exit_codes(tmp_path):
    # the m1=5 boost profile verifies its density target but genuinely
    # exceeds the 3/2 cube-moment target, so the cert reports a failure
    code = main(["construct", "--kind", "product", "--alpha", "0.25", "--epsilon", "8e-3",
                 "--factors", "5", "--out", str(tmp_path / "p"), "--seed", "42"])
    assert code == 1
    cert = json.loads((tmp_path / "p.cert.json").read_text())
    assert cert["conclusions"]["max_offdiag_le_target"] is True
    assert cert["conclusions"]["mean_cube_le_3_2_alpha3"] is False
    assert abs(cert["max_offdiag_density"] - 0.25**3 * 50 / 64) < 1e-12
    # infeasible factors
    code = main(["construct", "--kind", "product", "--alpha", "0.25", "--epsilon", "1e-3",
                 "--factors", "5,15", "--out", str(tmp_path / "q"), "--seed", "1"])
    assert code == 4
    # retries exhausted at a two-level desk run
    code = main(["construct", "--kind", "product", "--alpha", "0.25", "--epsilon", "1e-3",
                 "--factors", "5,101", "--retries", "2", "--out", str(tmp_path / "r"),
                 "--seed", "1"])
    assert code == 3


def test_verify_replay(tmp_path):
    main(["construct", "--kind", "product", "--alpha", "0.25", "--epsilon", "8e-3",
          "--factors", "5", "--out", str(tmp_path / "p"), "--seed", "42"])
    code = main(["verify", "--in", f"{tmp_path}/p.fn.json", "--bound", "rel",
                 "--epsilon", "8e-3"])
    assert code == 0
    # a constant function fails the relative bound
    from popdiff.domains import DensityFn, cyclic, save_fn

    save_fn(DensityFn(cyclic(101), np.full(101, 0.25)), tmp_path / "flat.json")
    assert main(["verify", "--in", str(tmp_path / "flat.json"), "--bound", "rel",
                 "--epsilon", "1e-3"]) == 1


def test_verify_set_artifact(tmp_path):
    # a progression-free set has zero density at every nonzero difference,
    # so it clears the absolute bound whenever alpha^3 - eps >= 0
    main(["construct", "--kind", "behrend", "--n", "27", "--out", str(tmp_path / "b")])
    code = main(["verify", "--in", f"{tmp_path}/b.set.json", "--bound", "abs",
                 "--epsilon", "0.01"])
    assert code == 0


def test_upper_command(tmp_path):
    out = tmp_path / "g"
    main(["construct", "--kind", "model", "--alpha", "0.3", "--n", "1009",
          "--out", str(out), "--seed", "0"])
    code = main(["upper", "--in", f"{out}.fn.json", "--epsilon", "0.05",
                 "--schedule", "geometric", "--rho0", "0.3", "--out", str(tmp_path / "t")])
    assert code == 0
    trace = json.loads((tmp_path / "t.trace.json").read_text())
    assert trace["d"] != 0
    assert trace["density"] >= 0.3**3 - 0.05


def test_upper_degenerate_exit(tmp_path):
    out = tmp_path / "g"
    main(["construct", "--kind", "model", "--alpha", "0.25", "--n", "101",
          "--out", str(out), "--seed", "0"])
    code = main(["upper", "--in", f"{out}.fn.json", "--epsilon", "0.5",
                 "--schedule", "strict", "--out", str(tmp_path / "t")])
    assert code == 5


def test_malformed_file_exit(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["scan", "--in", str(bad), "--out", str(tmp_path / "s")]) == 2


def test_determinism_byte_identical(tmp_path):
    runs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        main(["construct", "--kind", "product", "--alpha", "0.25", "--epsilon", "8e-3",
              "--factors", "5", "--out", str(d / "p"), "--seed", "42"])
        main(["construct", "--kind", "model", "--alpha", "0.25", "--n", "101",
              "--out", str(d / "g"), "--seed", "42"])
        main(["upper", "--in", str(d / "g.fn.json"), "--epsilon", "0.05",
              "--schedule", "geometric", "--rho0", "0.25", "--out", str(d / "t"),
              "--seed", "42"])
        runs.append([digest(d / f) for f in
                     ("p.fn.json", "p.cert.json", "g.fn.json", "t.trace.json")])
    assert runs[0] == runs[1]


def test_env_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("POPDIFF_SEED", "123")
    main(["construct", "--kind", "model", "--alpha", "0.25", "--n", "101",
          "--out", str(tmp_path / "g"), "--seed", "7"])
    obj = json.loads((tmp_path / "g.fn.json").read_text())
    assert obj["meta"]["seed"] == 123
