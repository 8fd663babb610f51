import json
import subprocess
import sys

import pytest

from relamen.cli import main
from relamen.errors import ParseError, ValidationError
from relamen.jobs import bundled_jobs, group_text, parse_group, parse_spec, report_text, run, serialize_job

MINIMAL = """\
# simple random walk on F2
[group]
group = free(2)

[action]
kind = translation

[task]
kind = spectral
radius = 3
"""


def test_minimal_job_parses():
    job = parse_spec(MINIMAL)
    assert job.group == "free(2)" and job.action == "translation" and job.task == "spectral"
    assert job.params == {"radius": "3"}


def test_unknown_action_names_key():
    with pytest.raises(ValidationError) as info:
        parse_spec(MINIMAL.replace("translation", "conjugattion"))
    assert info.value.key == "kind"
    assert info.value.line == 6


def test_negative_radius():
    with pytest.raises(ValidationError) as info:
        parse_spec(MINIMAL.replace("radius = 3", "radius = -1"))
    assert info.value.key == "radius"


@pytest.mark.parametrize(
    "text",
    ["[group]\ngroup = free(2)\n[bogus]\n", "group = free(2)\n", "[group]\ngroup free(2)\n", "[group\n"],
)
def test_parse_errors_carry_lines(text):
    with pytest.raises(ParseError) as info:
        parse_spec(text)
    assert info.value.line is not None


def test_missing_section():
    with pytest.raises(ValidationError):
        parse_spec("[group]\ngroup = z\n[action]\nkind = shift\n")


def test_incompatible_action():
    with pytest.raises(ValidationError):
        parse_spec(MINIMAL.replace("free(2)", "z").replace("translation", "bernoulli"))


@pytest.mark.parametrize(
    "text",
    ["z", "free(3)", "cyclic(5)", "freeproduct(cyclic(2), cyclic(3))", "direct(free(2), z)", "semidirect(free(2), cyclic(2), swap)", "wreath(z, intline)", "wreath(cyclic(2), group(free(1)))"],
)
def test_group_expressions_round_trip(text):
    assert group_text(parse_group(text)) == text


@pytest.mark.parametrize("name", sorted(bundled_jobs()))
def test_bundled_round_trip(name):
    job = parse_spec(bundled_jobs()[name])
    assert parse_spec(serialize_job(job)) == job


def _strip_time(report):
    return {k: v for k, v in report.items() if k != "wall_time"}


@pytest.mark.parametrize("name", sorted(bundled_jobs()))
def test_bundled_jobs_complete_and_deterministic(name):
    job = parse_spec(bundled_jobs()[name])
    r1, c1 = run(job, seed=4)
    r2, c2 = run(job, seed=4)
    assert c1 == c2 == 0 and r1["status"] == "completed"
    assert report_text(_strip_time(r1)) == report_text(_strip_time(r2))
    assert r1["schema"] == "relamen-report/1"
    assert r1["evidence"] in ("PROVEN-ON-INPUT", "EVIDENCE")


def test_paradox_job():
    r, _ = run(parse_spec(bundled_jobs()["paradox_f2_swap"]))
    assert r["payload"]["covering_ok"] and r["payload"]["disjoint_ok"]
    assert r["payload"]["checked"] == 13121


def test_lamplighter_job():
    r, _ = run(parse_spec(bundled_jobs()["lamplighter_folner"]))
    assert r["payload"]["max_quotient"] == "2/5"


def test_car_job_exact():
    r, _ = run(parse_spec(bundled_jobs()["car_commutator"]), exact=True)
    assert r["payload"]["value"] == "1/8"


def test_runtime_error_gives_code_two():
    job = parse_spec(MINIMAL.replace("kind = spectral", "kind = orbits\npoints = q"))
    r, code = run(job)
    assert code == 2 and r["status"] == "error"


def test_main_writes_report(tmp_path, capsys):
    path = tmp_path / "job.txt"
    path.write_text(MINIMAL)
    out = tmp_path / "report.json"
    assert main([str(path), "--out", str(out), "--seed", "1"]) == 0
    rep = json.loads(out.read_text())
    assert rep["seed"] == 1 and rep["payload"]["series"][0]["window_size"] == 53


def test_main_bad_file(tmp_path, capsys):
    path = tmp_path / "job.txt"
    path.write_text("[group]\ngroup = nonsense(1)\n")
    assert main([str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "relamen", "example:car_commutator", "--exact"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["payload"]["value"] == "1/8"


def test_list_examples(capsys):
    assert main(["--list-examples"]) == 0
    assert "paradox_f2_swap" in capsys.readouterr().out
