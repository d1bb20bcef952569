import pytest


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    # never touch the user's real run cache
    monkeypatch.setenv("TCMCAP_CACHE", str(tmp_path / "runs.jsonl"))
