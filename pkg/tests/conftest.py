import pytest

import config


@pytest.fixture(autouse=True)
def isolated_logs(tmp_path, monkeypatch):
    """Keep log files out of the working tree and console output plain."""
    monkeypatch.setattr(config, "MASTER_LOG", str(tmp_path / "qfavard_log.txt"))
    monkeypatch.setattr(config, "FAILED_LOG", str(tmp_path / "failed_steps.txt"))
    monkeypatch.setattr(config, "USE_COLOR", False)
    return tmp_path
