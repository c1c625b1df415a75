import json

import pytest

from torsionflow import CheckReport, UnknownSuite, run_suite


def test_disk_suite_passes():
    reports = run_suite("disk")
    assert len(reports) == 5
    assert all(isinstance(r, CheckReport) for r in reports)
    assert all(r.passed for r in reports)
    assert all(r.runtime_ms >= 0 for r in reports)
    assert {r.provenance for r in reports} <= {"analytic", "identity", "cross-oracle"}


def test_suite_list_concatenates():
    reports = run_suite(["disk", "gradient_bound"])
    names = [r.name for r in reports]
    assert sum(n.startswith("disk.") for n in names) == 5
    assert sum(n.startswith("gradient_bound.") for n in names) == 4


def test_gradient_bound_uses_upper_metric():
    reports = run_suite("gradient_bound")
    for r in reports:
        assert r.metric == "upper"
        assert r.measured <= r.expected + r.tolerance
        assert r.passed


def test_ball_stationarity_suite():
    reports = run_suite("ball_stationarity")
    assert len(reports) == 12  # {R1, R2} x {p0, p1, p3} x {velocity, gamma}
    assert all(r.passed for r in reports)


def test_reports_serialize():
    reports = run_suite("disk")
    payload = json.dumps([r.to_dict() for r in reports])
    decoded = json.loads(payload)
    assert decoded[0]["name"] == reports[0].name
    assert set(decoded[0]) == {"name", "measured", "expected", "tolerance",
                              "metric", "provenance", "passed", "runtime_ms"}


def test_unknown_suite_is_reported():
    with pytest.raises(UnknownSuite) as exc:
        run_suite("frobnicate")
    assert "frobnicate" in exc.value.args[0]
    assert "disk" in exc.value.args[0]  # lists what is available
