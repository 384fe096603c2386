from __future__ import annotations

from pathlib import Path

import pytest

from helploop import HelpService

from .helpers.clocks import EPOCH, ScriptedClock, counter_ids

FIXTURE_LOG = Path(__file__).resolve().parent.parent / "fixtures" / "deployment_log.ndjson"


@pytest.fixture
def clock() -> ScriptedClock:
    return ScriptedClock(EPOCH)


@pytest.fixture
def make_service(tmp_path, clock):
    """Factory for services on fresh logs with scripted time and counter ids."""

    opened: list[HelpService] = []

    def factory(name: str = "events.ndjson", **kwargs) -> HelpService:
        kwargs.setdefault("clock", clock.now)
        kwargs.setdefault("id_factory", counter_ids())
        service = HelpService.open(tmp_path / name, **kwargs)
        opened.append(service)
        return service

    yield factory
    for service in opened:
        service.close()


@pytest.fixture
def service(make_service) -> HelpService:
    return make_service()


@pytest.fixture(scope="session")
def fixture_log() -> Path:
    assert FIXTURE_LOG.exists(), "run fixtures/build_deployment_fixture.py first"
    return FIXTURE_LOG
