import json
import math

import pytest

from collarflex import scenarios as scn
from collarflex.cli import main
from collarflex.collar import check_boundary_condition


def test_catalog_contents_and_facts():
    cat = scn.catalog()
    names = {s.name for s in cat}
    assert {"spherical_cap", "flat_cone", "product_cylinder", "hemisphere", "corner_two_caps",
            "minoo_step2"} <= names
    for sc in cat:
        assert all(r <= scn.FACT_TOL for r in sc.verified.values()), sc.name


def test_catalog_examples():
    cap = scn.spherical_cap(3, math.pi / 3)
    facts = {f.quantity: f.expected for f in cap.facts}
    assert facts["scal"] == 6
    assert facts["H"] == pytest.approx(1 / math.tan(math.pi / 3))
    assert facts["boundary_scale"] == pytest.approx(math.sin(math.pi / 3) ** 2)
    cone = scn.flat_cone(3)
    assert {f.quantity: f.expected for f in cone.facts}["II_over_g0"] == 1
    cyl = scn.product_cylinder_scenario(3, 1.0)
    assert {f.quantity: f.expected for f in cyl.facts}["scal"] == 2
    assert check_boundary_condition(cyl.collars[0], "doubling").passed


def test_wrong_fact_is_rejected():
    sc = scn.spherical_cap()
    with pytest.raises(scn.ScenarioError):
        scn.Scenario(sc.name, sc.params, sc.collars, (scn.Fact("H", 0.5, "wrong on purpose"),), sc.recipe, sc.sigma)


def test_build_unknown():
    with pytest.raises(ValueError):
        scn.build("klein_bottle")


def test_flat_cone_pipeline_constant_bend():
    res = scn.run_pipeline(scn.flat_cone(3), samples=(9, 33))
    assert res.passed
    sched = next(iter(res.schedules.values()))
    assert not any(st.corrections for st in sched.stages[1])


def test_hemisphere_pipeline():
    res = scn.run_pipeline(scn.hemisphere(3), samples=(9, 65))
    assert res.passed and len(res.reports) == 2


def test_reports_byte_stable(tmp_path):
    sc = scn.product_cylinder_scenario(3)
    a = scn.write_outputs(scn.run_pipeline(sc, samples=(9, 33)), tmp_path / "a")
    b = scn.write_outputs(scn.run_pipeline(sc, samples=(9, 33)), tmp_path / "b")
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]
    assert json.loads(a[0].read_text())["schema_version"] == "1"


def test_cli_catalog(capsys):
    assert main(["catalog", "--name", "flat_cone"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["name"] == "flat_cone" if isinstance(out, dict) else out[0]["name"] == "flat_cone"


def test_cli_verify_exit_codes(tmp_path):
    assert main(["verify", "--scenario", "product_cylinder", "--condition", "doubling"]) == 0
    assert main(["verify", "--scenario", "flat_cone", "--condition", "doubling"]) == 1
    rep = tmp_path / "r.json"
    assert main(["verify", "--scenario", "spherical_cap", "--condition", "H>=", "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["min_margin"] == pytest.approx(1 / math.tan(math.pi / 3))


def test_cli_input_errors(tmp_path):
    assert main(["cutoffs", "--delta", "0.7"]) == 2
    assert main(["yamabe", "--profile", "flatball", "--n", "2"]) == 2
    assert main(["deform", "master", "--metric", str(tmp_path / "missing.json"), "--sigma", "0"]) == 2


def test_cli_corner_rejected(tmp_path):
    assert main(["run", "--scenario", "corner_two_caps", "--samples", "9,33", "--out-dir", str(tmp_path)]) in (0, 1)
    # r = 2 pi / 3 gives H1 + H2 < 0
    from collarflex.deformations import desingularize
    from collarflex.collar import PreconditionError

    a = scn.cap_collar(3, 2 * math.pi / 3)
    with pytest.raises(PreconditionError):
        desingularize(a, a, 0.0)


def test_cli_deform_metric_file(tmp_path, monkeypatch):
    monkeypatch.setenv("COLLARFLEX_OUT_DIR", str(tmp_path))
    f = tmp_path / "cyl.json"
    f.write_text(json.dumps(scn.product_cylinder_scenario(3).collars[0].to_json()))
    rep, csv = tmp_path / "push.json", tmp_path / "push.csv"
    code = main(["deform", "push", "--metric", str(f), "--sigma", "1.5", "--s", "1", "--delta", "0.01",
                 "--samples", "9,33", "--report", str(rep), "--csv", str(csv)])
    assert code == 0
    assert json.loads(rep.read_text())["pass"] is True
    assert csv.read_text().splitlines()[0] == "s,t,min_scal,H,II_min_eig"


def test_cli_yamabe_and_karea(tmp_path):
    rep = tmp_path / "y.json"
    assert main(["yamabe", "--profile", "cap:1.0", "--grid", "1024", "--report", str(rep)]) == 0
    d = json.loads(rep.read_text())
    assert d["lambda1"] > 0 and d["phi_positive"]
    assert main(["karea", "demo", "--m", "2"]) == 0
    assert main(["karea", "ke", "--n", "2", "--rank", "1", "--trials", "20", "--seed", "3"]) == 0


def test_cli_cutoffs_csv(tmp_path):
    f = tmp_path / "chi.csv"
    assert main(["cutoffs", "--delta", "0.25", "--csv", str(f)]) == 0
    assert f.read_text().startswith("t,chi,chi_dot,chi_ddot")


def test_cli_global_flags_after_subcommand(tmp_path):
    assert main(["run", "--scenario", "product_cylinder", "--out-dir", str(tmp_path), "--samples", "9,33"]) == 0
    assert (tmp_path / "product_cylinder").is_dir()


def test_cli_yamabe_coarse_grid_fails_h_tolerance():
    # at N = 256 the boundary mean curvature of g_hat is about 3e-6, above 1e-6
    assert main(["yamabe", "--profile", "cap:1.0", "--grid", "256"]) == 1
