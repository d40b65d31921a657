import pytest

from tmr.text import MemoryBuilder


def build_memory(rows):
    """Memory from ``(source, target, domain)`` triples."""
    builder = MemoryBuilder()
    for src, tgt, dom in rows:
        builder.add(src, tgt, dom)
    return builder.build()


@pytest.fixture
def small_memory():
    return build_memory([
        ("the patient has orthostatic hypotension .", "le patient a une hypotension orthostatique .", "med"),
        ("take two tablets daily .", "prendre deux comprimes par jour .", "med"),
        ("the dose was reduced .", "la dose a ete reduite .", "med"),
        ("the court dismissed the appeal .", "la cour a rejete l' appel .", "law"),
        ("the contract is void .", "le contrat est nul .", "law"),
    ])


_acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and (rep.when == "call" or rep.outcome != "passed"):
        label = (item.function.__doc__ or item.name).strip().splitlines()[0]
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _acceptance.append(f"{status}  {label}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance:
            terminalreporter.write_line(line)
