"""Tests for the certification runner's report plumbing."""

import json
import math

import pytest

from pwmdp.harness.certify import (
    MUTATIONS,
    SUITES,
    CertificationReport,
    SuiteResult,
    report_to_json,
    run_certification,
)


def test_suite_roster_covers_all_criteria():
    names = [fn.__name__.removeprefix("suite_") for fn in SUITES]
    assert names == [
        "contraction_certificate",
        "blackwell_identities",
        "sharp_threshold",
        "detection_delay_table",
        "simplex_preservation",
        "safety_monotonicity",
        "error_budget",
        "regime_perturbation",
        "piecewise_three_phase",
        "context_losses",
        "shared_critic_equivalence",
        "reproducibility",
    ]


def test_unknown_mutation_rejected():
    with pytest.raises(ValueError, match="unknown mutation"):
        run_certification(seed=0, mutation="drop_tables")
    assert set(MUTATIONS) == {"unnormalized_belief", "unfrozen_belief", "unclipped_surprise"}


def test_report_json_round_trips_losslessly():
    report = CertificationReport(
        seed=7,
        mutation=None,
        suites=(
            SuiteResult("alpha", 100, 1.25e-13, 1e-12, True),
            SuiteResult("beta", 3, math.inf, 0.0, False),
        ),
        passed=False,
    )
    payload = json.loads(report_to_json(report))
    assert payload["seed"] == 7
    assert payload["mutation"] is None
    assert payload["passed"] is False
    assert payload["suites"][0] == {
        "name": "alpha",
        "tested_instances": 100,
        "max_violation": 1.25e-13,
        "tolerance": 1e-12,
        "passed": True,
    }
    assert payload["suites"][1]["max_violation"] == math.inf
    # serialization is deterministic
    assert report_to_json(report) == report_to_json(report)
