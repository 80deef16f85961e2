"""The ten acceptance criteria, each run from its config in configs/.

Every criterion records one PASS/FAIL line in conftest.ACCEPTANCE_LINES; the lines
are printed in the terminal summary at the end of the run.
"""
from pathlib import Path

import pytest

import conftest
from zwitterlab.experiments import REGISTRY, ExperimentConfig, run_experiment

CONFIGS = {ExperimentConfig.load(p).experiment: p
           for p in sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.yaml"))}
BY_CRITERION = {e.criterion: e.name for e in REGISTRY.values()}

CUBIC_FLOOR = "scan floor, cubic V, gamma=pi/4"


@pytest.fixture(scope="module")
def results(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = run_experiment(ExperimentConfig.load(CONFIGS[name]), out_dir=out)
        return cache[name]
    return get


def _record(n, res):
    bad = [c.name for c in res.checks if c.acceptance and not c.passed]
    verdict = "PASS" if not bad else "FAIL (" + "; ".join(bad) + ")"
    conftest.ACCEPTANCE_LINES[n] = (f"criterion {n:>2} {res.name}: {verdict}"
                                    f"  [{res.report['runtime_s']:.1f} s]")


def _failures(res, skip=()):
    return [(c.name, c.value, c.threshold) for c in res.checks
            if c.acceptance and not c.passed and c.name not in skip]


def test_every_criterion_has_a_config():
    assert sorted(BY_CRITERION) == list(range(1, 11))
    assert set(CONFIGS) == set(BY_CRITERION.values())


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(results, n):
    res = results(BY_CRITERION[n])
    _record(n, res)
    assert any(c.acceptance for c in res.checks)
    assert _failures(res) == []


def test_criterion_10_identities(results):
    res = results(BY_CRITERION[10])
    _record(10, res)
    assert _failures(res, skip={CUBIC_FLOOR}) == []


@pytest.mark.xfail(strict=True, reason="H_Q + H~_Q + 2 tan^2(gamma) H_cl commutes with H_gamma whenever "
                   "V''' is constant, so the cubic-potential scan floor is zero up to rounding")
def test_criterion_10_cubic_scan_floor(results):
    res = results(BY_CRITERION[10])
    check = next(c for c in res.checks if c.name == CUBIC_FLOOR)
    assert check.passed, f"floor {check.value:.3g} is not above 1e-3"
