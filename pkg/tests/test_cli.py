import io
import json
import time

import pytest

from homvol import __version__, geometry
from homvol.cli import FIELDS, main, parse_csv, parse_json
from homvol.scales import RR


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_volume_closed_rd_domain():
    code, out, _ = run("volume", "--kind", "domain", "--scale", "rd", "--p", "1", "--method", "closed")
    assert code == 0
    (rec,) = json.loads(out)
    assert rec["estimate"] == pytest.approx(0.666667, abs=1e-6)
    assert rec["quantity"] == "domain_volume" and rec["method"] == "closed"
    assert rec["tool_version"] == __version__
    assert set(rec) == set(FIELDS)


def test_volume_quad_or_surface():
    code, out, _ = run("volume", "--kind", "surface", "--scale", "or", "--p", "1", "--method", "quad")
    assert code == 0
    assert json.loads(out)[0]["estimate"] == pytest.approx(2.47, abs=0.01)


def test_volume_several_scales_and_bounds():
    code, out, _ = run("volume", "--kind", "surface", "--scale", "rd,rr", "--p", "0.5,1", "--format", "csv")
    assert code == 0
    recs = parse_csv(out)
    assert [(r.scale, r.p) for r in recs] == [("rd", 0.5), ("rd", 1.0), ("rr", 0.5), ("rr", 1.0)]
    assert recs[2].normalized == pytest.approx(geometry.RR_SURFACE_CONSTANT)


def test_volume_mc_record_has_seed_and_error():
    code, out, _ = run("volume", "--kind", "domain", "--scale", "rr", "--method", "mc", "--samples", "10000", "--seed", "5")
    rec = json.loads(out)[0]
    assert code == 0 and rec["seed"] == 5 and rec["std_error"] > 0 and rec["samples_or_nodes"] == 10000


@pytest.mark.parametrize(
    "argv",
    [
        ["volume", "--kind", "surface", "--scale", "rr", "--p", "0", "--method", "closed"],
        ["volume", "--kind", "surface", "--scale", "rr", "--p", "1.5"],
        ["volume", "--kind", "surface", "--scale", "hr"],
        ["volume", "--kind", "area", "--scale", "rd"],
        ["tables", "--which", "thm9"],
        ["tables", "--which", "wald", "--alpha", "1.5", "--samples", "100"],
        ["tables", "--which", "wald", "--n-grid", "0,5", "--samples", "100"],
        [],
    ],
)
def test_usage_errors_exit_2(argv):
    code, _, _ = run(*argv)
    assert code == 2


def test_closed_form_unavailable():
    code, out, err = run("volume", "--kind", "surface", "--scale", "or", "--method", "closed")
    assert code == 2 and out == ""
    assert "no closed form" in err and "use mc or quad" in err


def test_csv_json_round_trip():
    args = ["tables", "--which", "wald", "--samples", "20000", "--seed", "3", "--n-grid", "100,500"]
    _, js, _ = run(*args, "--format", "json")
    _, cs, _ = run(*args, "--format", "csv")
    assert parse_json(js) == parse_csv(cs)
    assert cs.splitlines()[0] == ",".join(FIELDS)
    assert "\r\n" in cs


def test_wald_table_deterministic_and_records():
    args = ["tables", "--which", "wald", "--samples", "50000", "--seed", "42"]
    first, second = run(*args)[1], run(*args)[1]
    assert first == second
    recs = parse_json(first)
    assert sum(r.quantity == "acceptance_volume" for r in recs) == 15
    assert sum(r.quantity == "ratio" for r in recs) == 10
    assert all(r.seed == 42 and r.std_error is not None and r.alpha == 0.05 for r in recs)


def test_env_seed_and_flag_precedence(monkeypatch):
    args = ["volume", "--kind", "domain", "--scale", "rd", "--method", "mc", "--samples", "1000"]
    monkeypatch.setenv("HOMVOL_SEED", "77")
    assert json.loads(run(*args)[1])[0]["seed"] == 77
    assert json.loads(run(*args, "--seed", "8")[1])[0]["seed"] == 8
    monkeypatch.setenv("HOMVOL_SEED", "abc")
    assert run(*args)[0] == 2


def test_markdown_tables():
    code, out, _ = run("tables", "--which", "coro1", "--p-grid", "0.1", "--format", "markdown")
    assert code == 0
    assert "| V_o(p)/F_o(p) | 2.34 |" in out
    assert "| V_a(p)/F_a(p) | 2.00 |" in out
    code, out, _ = run("tables", "--which", "thm2", "--p-grid", "0.4", "--format", "markdown")
    assert "| V_o(p)/p^3 | 1.77 |" in out
    code, out, _ = run("tables", "--which", "thm1", "--p-grid", "0.9,1", "--format", "markdown")
    assert "| F_o(p)/p^3 | 0.85 | 1.00 |" in out


def test_tables_mc_method_reports_errors():
    code, out, _ = run("tables", "--which", "thm1", "--method", "mc", "--samples", "20000", "--p-grid", "0.5", "--format", "markdown")
    assert code == 0 and "std error" in out


def test_coro1_records():
    code, out, _ = run("tables", "--which", "coro1", "--p-grid", "0.5")
    recs = parse_json(out)
    by_scale = {r.scale: r for r in recs}
    assert by_scale["rd"].estimate == 2.0
    assert by_scale["rr"].estimate == pytest.approx(geometry.RR_RATIO_CONSTANT)
    assert by_scale["or"].estimate == pytest.approx(2.30, abs=0.02)


def test_out_path(tmp_path):
    target = tmp_path / "vol.csv"
    code, out, _ = run("volume", "--kind", "domain", "--scale", "rr", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    assert parse_csv(target.read_text())[0].estimate == 0.75


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nkind = surface\nscale=rr\np = 0.5\nformat=csv\n")
    code, out, _ = run("volume", "--config", str(cfg))
    assert code == 0
    rec = parse_csv(out)[0]
    assert rec.quantity == "surface_volume" and rec.p == 0.5
    code, out, _ = run("volume", "--config", str(cfg), "--p", "1")
    assert parse_csv(out)[0].p == 1.0
    assert run("volume", "--config", str(tmp_path / "missing.cfg"))[0] == 2


def test_check_fast_passes_quickly():
    start = time.perf_counter()
    code, out, _ = run("check", "--fast")
    assert code == 0, out
    assert time.perf_counter() - start < 10
    assert "FAIL" not in out


def test_check_detects_perturbed_volume_element(monkeypatch):
    original = geometry.volume_element

    def perturbed(scale, x, y, z):
        v = original(scale, x, y, z)
        return v + 1e-6 if scale is RR else v

    monkeypatch.setattr(geometry, "volume_element", perturbed)
    code, out, _ = run("check", "--fast")
    assert code == 1
    assert "FAIL gram/rr" in out
