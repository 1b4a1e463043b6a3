import json
from pathlib import Path

import pytest

from hurwitzlab.cli import (EXIT_CAPACITY, EXIT_OK, EXIT_VALIDATION,
                            load_config, main, resolve_c, resolve_group,
                            run_config)
from hurwitzlab.errors import ValidationError
from hurwitzlab.groups import symmetric


def test_resolve_group():
    assert resolve_group("S3").order == 6
    assert resolve_group("C9").order == 9
    assert resolve_group("D5").order == 10
    assert resolve_group("Q8").order == 8
    assert resolve_group("C3xC3").order == 9
    assert resolve_group("A4").order == 12
    with pytest.raises(ValidationError):
        resolve_group("X9")


def test_resolve_c():
    s3 = symmetric(3)
    assert len(resolve_c(s3, "all")) == 5
    assert len(resolve_c(s3, "involutions")) == 3
    assert len(resolve_c(s3, "order:3")) == 2
    invol = resolve_c(s3, "involutions")[0]
    assert sorted(resolve_c(s3, f"class-of:{invol}")) == \
        sorted(resolve_c(s3, "involutions"))
    assert resolve_c(s3, "1, 3,4") == [1, 3, 4]


def test_orbits_cli(tmp_path, capsys):
    out = tmp_path / "orbits.csv"
    rc = main(["orbits", "--group", "S3", "--c", "involutions", "--n", "4",
               "--out", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[2] == ("orbit,representative,size,invariant_torsion,"
                        "invariant_vector,shape")
    assert lines[3].startswith("0,") and ",8," in lines[3]


def test_exit_codes(capsys):
    assert main(["orbits", "--group", "NOPE", "--n", "3"]) == EXIT_VALIDATION
    assert main(["frob-count", "--group", "S3", "--c", "all", "--q", "3",
                 "--n-min", "2", "--n-max", "2"]) == EXIT_VALIDATION


def test_config_file_json(tmp_path):
    cfg = {"kind": "randgrp-moment", "h": "C3", "n_min": 1, "n_max": 2}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    loaded = load_config(str(path))
    rep = run_config(loaded)
    assert rep.rows[0] == [1, "2/3", "1/1"]


def test_config_file_ini(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text("kind = randgrp-moment\nh = C3\nn_min = 1\nn_max = 1\n")
    rep = run_config(load_config(str(path)))
    assert rep.rows == [[1, "2/3", "1/1"]]


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ValidationError):
        run_config({"kind": "randgrp-moment", "h": "C3", "bogus": 1})
    with pytest.raises(ValidationError):
        run_config({"kind": "wat"})


def test_seed_required_for_sampling():
    with pytest.raises(ValidationError):
        run_config({"kind": "randgrp-sample", "n": 2, "trials": 10,
                    "gamma": "C2"})


def test_report_reproducible():
    cfg = {"kind": "randgrp-sample", "gamma": "C2", "exponent": 3, "n": 3,
           "trials": 200, "seed": 9}
    r1 = run_config(dict(cfg))
    r2 = run_config(dict(cfg))
    assert r1.fingerprint == r2.fingerprint
    assert r1.to_csv() == r2.to_csv()
    assert r1.to_json() == r2.to_json()
    cfg2 = dict(cfg)
    cfg2["workers"] = 3
    r3 = run_config(cfg2)
    # rows identical for any worker count (config echo differs)
    assert r3.rows == r1.rows


def test_run_config_cli(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "predict-moment", "h": "C3",
                                "gamma": "inversion", "gamma_inf": "full"}))
    out = tmp_path / "r.json"
    rc = main(["run", str(path), "--out", str(out), "--format", "json"])
    assert rc == EXIT_OK
    data = json.loads(out.read_text())
    assert data["rows"] == [["limit", "1/1"]]
    assert "fingerprint" in data


def test_verify_unknown_suite():
    assert main(["verify", "bogus"]) == EXIT_VALIDATION
