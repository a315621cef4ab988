import pytest

from shallowmin import synthesize
from shallowmin.errors import WrongRegime
from shallowmin.verify import (
    PropertyCheck,
    SUITES,
    run_suite,
    suite_bounds,
    suite_exact_min,
)


def test_all_suites_pass_on_square_dataset():
    ds = synthesize(3, 3, [8, 8, 8], noise=0.05, seed=4)
    checks = run_suite("all", ds, seed=4)
    failing = [c.name for c in checks if not c.passed]
    assert not failing, failing
    names = {c.name for c in checks}
    # every suite contributed at least one check
    for prefix in ("bounds.", "exact.", "degeneracy.", "invariance.",
                   "metric.", "truncation."):
        assert any(n.startswith(prefix) for n in names)


def test_bounds_suite_on_rectangular_dataset():
    ds = synthesize(6, 3, [5, 5, 5], noise=0.1, seed=2)
    assert all(c.passed for c in suite_bounds(ds))


def test_exact_min_suite_rejects_rectangular():
    ds = synthesize(5, 3, [4, 4, 4], noise=0.05, seed=0)
    with pytest.raises(WrongRegime):
        suite_exact_min(ds)


def test_unknown_suite_name():
    ds = synthesize(2, 2, [3, 3], noise=0.0, seed=0)
    with pytest.raises(ValueError):
        run_suite("nonsense", ds)


def test_suite_names_stable():
    assert SUITES == ("bounds", "exact-min", "degeneracy", "invariance",
                      "metric", "truncation")


def test_cli_verify_reports_failure(monkeypatch, capsys):
    from shallowmin import cli

    def fake_run_suite(name, ds, seed=0):
        return [PropertyCheck(name="fake.broken", passed=False,
                              measured=1.0, tolerance=0.1)]

    monkeypatch.setattr(cli, "run_suite", fake_run_suite)
    code = cli.main(["verify", "bounds", "--m", "2", "--q", "2"])
    assert code == 1
    captured = capsys.readouterr()
    assert "[FAIL] fake.broken" in captured.out
    assert "first failing property: fake.broken" in captured.err
