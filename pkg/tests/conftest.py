import random

import pytest


@pytest.fixture
def rng() -> random.Random:
    """Seeded RNG so bulk randomized suites are reproducible."""
    return random.Random(0x6041)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    verdict = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    print(f"\nACCEPTANCE {verdict}: {name}")
