import pytest

from paperstruct.ingest import RawSource, ingest, parse_article

from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str):
    return RawSource.from_file(FIXTURES / name)


@pytest.fixture(scope="session")
def zhai_raw():
    return load_fixture("zhai2006.xml")


@pytest.fixture(scope="session")
def gosby_raw():
    return load_fixture("gosby2011.xml")


@pytest.fixture(scope="session")
def zhai():
    article, _ = ingest(load_fixture("zhai2006.xml"))
    return article


@pytest.fixture(scope="session")
def gosby():
    article, _ = ingest(load_fixture("gosby2011.xml"))
    return article


@pytest.fixture(scope="session")
def minimal_unsplit():
    return parse_article(load_fixture("minimal.xml"))


@pytest.fixture(scope="session")
def minimal():
    article, _ = ingest(load_fixture("minimal.xml"))
    return article


@pytest.fixture(scope="session")
def dangling_report():
    return ingest(load_fixture("dangling.xml"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion, visible in every run."""
    lines = []
    for status, word in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            name = name[5:] if name.startswith("test_") else name
            lines.append(f"ACCEPTANCE {word}: {name}")
    if lines:
        terminalreporter.write_line("")
        for line in lines:
            terminalreporter.write_line(line)
