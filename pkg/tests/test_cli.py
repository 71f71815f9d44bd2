import json

import jsonschema
import pytest

from mfsde.cli import header_to_config, main, parse_config

SCHEMA = json.loads(
    __import__("importlib.resources", fromlist=["files"])
    .files("mfsde")
    .joinpath("schemas/report.schema.json")
    .read_text()
)


def write_config(path, text):
    path.write_text(text)
    return str(path)


def validate_report(path):
    doc = json.loads(path.read_text())
    jsonschema.validate(doc, SCHEMA)
    return doc


def test_parse_config_comments_and_duplicates(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("# header\nN=5\ndt=0.1  # inline\n\nT=1.0\n")
    cfg = parse_config(p)
    assert cfg == {"N": "5", "dt": "0.1", "T": "1.0"}
    p.write_text("N=5\nN=6\n")
    with pytest.raises(Exception, match="duplicate"):
        parse_config(p)


def test_simulate_zero_coefficients(tmp_path):
    cfg = write_config(
        tmp_path / "run.cfg",
        "coefficients.name=zero\nN=5\ndt=0.1\nT=0.5\nseed=3\n"
        "init.kind=point\ninit.value=2.0\noutput.trajectory=1\n",
    )
    code = main(["simulate", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0
    doc = validate_report(tmp_path / "simulate.json")
    assert doc["verdict"] == "pass"
    traj = (tmp_path / "simulate_trajectory.csv").read_text().splitlines()
    data_rows = [r for r in traj if r and not r.startswith("#") and not r.startswith("t,")]
    assert all(float(r.split(",")[2]) == 2.0 for r in data_rows)


def test_simulate_missing_key_is_usage_error(tmp_path):
    cfg = write_config(tmp_path / "bad.cfg", "coefficients.name=zero\ndt=0.1\nT=0.5\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_unknown_key_rejected(tmp_path):
    cfg = write_config(
        tmp_path / "bad.cfg", "coefficients.name=zero\nN=2\ndt=0.1\nT=0.5\nbogus=1\n"
    )
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_check_certificate_failing_margin(tmp_path):
    # drift +x with claimed C = 0 violates the generator inequality
    cfg = write_config(
        tmp_path / "cert.cfg",
        "coefficients.name=ou-attraction\ncoefficients.theta=-1\ncoefficients.sigma=0\n"
        "certificate.V=quadratic\ncertificate.C=0\ngrid.lo=-5\ngrid.hi=5\ngrid.step=0.01\n",
    )
    code = main(["check-certificate", "--config", cfg, "--out", str(tmp_path)])
    assert code == 1
    doc = validate_report(tmp_path / "check_certificate.json")
    assert doc["verdict"] == "fail"
    margins = doc["generator_margin"]["conditions"]
    assert margins[0]["worst_margin"] > 0


def test_check_certificate_ou_passes(tmp_path):
    cfg = write_config(
        tmp_path / "cert.cfg",
        "coefficients.name=ou-attraction\ncertificate.V=quadratic\ncertificate.C=1\n",
    )
    assert main(["check-certificate", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert validate_report(tmp_path / "check_certificate.json")["verdict"] == "pass"


def test_check_conditions_pass_and_fail(tmp_path):
    ok = write_config(
        tmp_path / "ok.cfg",
        "coefficients.name=ou-attraction\ncertificate.V=polynomial\n"
        "certificate.alpha=2\ncertificate.C=12\ngrid.step=0.05\nN=200\n",
    )
    assert main(["check-conditions", "--config", ok, "--out", str(tmp_path)]) == 0
    validate_report(tmp_path / "check_conditions.json")

    bad = write_config(
        tmp_path / "bad.cfg",
        "coefficients.name=cubic\ncertificate.V=polynomial\n"
        "certificate.alpha=2\ncertificate.C=12\ngrid.step=0.05\nN=50\n",
    )
    assert main(["check-conditions", "--config", bad, "--out", str(tmp_path)]) == 1
    doc = validate_report(tmp_path / "check_conditions.json")
    assert doc["verdict"] == "fail"


def test_oracle_quick_run(tmp_path):
    cfg = write_config(
        tmp_path / "oracle.cfg",
        "oracle.h=sign\nN=2000\ndt=0.01\nT=0.5\nseed=5\ninit.kind=point\ninit.value=1\n",
    )
    code = main(["oracle", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0
    doc = validate_report(tmp_path / "oracle.json")
    assert doc["checks"][0]["sup_error"] <= doc["checks"][0]["bound"]
    header = (tmp_path / "oracle_series.csv").read_text().splitlines()[0]
    assert header.startswith("# mfsde-version=")


def test_stability_quick_run(tmp_path):
    cfg = write_config(
        tmp_path / "stab.cfg",
        "coefficients.name=ou-attraction\ncoefficients2.name=ou-attraction\n"
        "coefficients2.shift=0.2\nN=4000\ndt=0.01\nT=0.5\nseed=8\n"
        "estimator.kind=grid\nestimator.cell_width=0.1\ntimes=0.25,0.5\n",
    )
    assert main(["stability", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = validate_report(tmp_path / "stability.json")
    assert all(c["passed"] for c in doc["checks"])


def test_mollify_inspect(tmp_path):
    cfg = write_config(
        tmp_path / "mol.cfg",
        "coefficients.name=cubic\nmollify.n=2\nmollify.r=10\nsection.lo=-1\n"
        "section.hi=1\nsection.num=41\n",
    )
    assert main(["mollify-inspect", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "mollify_inspect_section.csv").read_text().splitlines()
    header = [l for l in lines if l.startswith("point")][0]
    assert header == "point,raw,mollified"
    validate_report(tmp_path / "mollify_inspect.json")


def test_round_trip_from_recorded_header(tmp_path):
    cfg = write_config(
        tmp_path / "run.cfg",
        "coefficients.name=linear-meanfield\nN=50\ndt=0.05\nT=0.25\nseed=12\n"
        "init.kind=gaussian\ninit.mean=0\ninit.std=1\n",
    )
    out1 = tmp_path / "first"
    out2 = tmp_path / "second"
    assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    recovered = header_to_config(out1 / "simulate_summary.csv")
    sub = recovered.pop("subcommand")
    cfg2 = write_config(
        tmp_path / "rerun.cfg", "".join(f"{k}={v}\n" for k, v in recovered.items())
    )
    assert main([sub, "--config", cfg2, "--out", str(out2)]) == 0
    assert (out1 / "simulate_summary.csv").read_bytes() == (
        out2 / "simulate_summary.csv"
    ).read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = write_config(
        tmp_path / "run.cfg",
        "coefficients.name=linear-meanfield\nN=50\ndt=0.05\nT=0.25\nseed=12\n",
    )
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "99"])
    a = (tmp_path / "a" / "simulate.json").read_text()
    b = json.loads((tmp_path / "b" / "simulate.json").read_text())
    assert json.loads(a)["seed"] == 12
    assert b["seed"] == 99
    assert b["config"]["seed"] == "99"
