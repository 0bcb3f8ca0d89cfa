import pytest

from toposl.verify import QUICK_ARGS, SUITES, greedy_violation, run_suites


@pytest.mark.parametrize("name", sorted(SUITES))
def test_quick_suite_passes(name):
    results = run_suites([name], quick=True)
    assert results
    for r in results:
        assert r.passed or r.informational, r.line()


def test_quick_args_cover_every_suite():
    assert set(QUICK_ARGS) == set(SUITES)


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suites(["nope"])


def test_greedy_violation_zero_for_textbook_pair():
    assert greedy_violation([4.0, 5.0], [1.0, 2.0, 3.0]) <= 1e-12
