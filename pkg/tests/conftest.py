"""Shared fixtures plus the acceptance-summary terminal hook."""

import pytest

# (criterion id, passed, detail) tuples recorded by test_acceptance.py
ACCEPTANCE_RESULTS = []


def record_acceptance(criterion: str, passed: bool, detail: str):
    ACCEPTANCE_RESULTS.append((criterion, passed, detail))
    assert passed, f"{criterion}: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{criterion}: {status} - {detail}")


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Small generated corpus shared by harness and CLI tests."""
    from scenecodec.harness import generate_corpus

    outdir = tmp_path_factory.mktemp("corpus")
    generate_corpus(12, seed=7, outdir=outdir)
    return outdir
