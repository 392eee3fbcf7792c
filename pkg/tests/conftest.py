import pytest

from sap_rts.sen import init_params


@pytest.fixture
def sen_file(tmp_path):
    """An untrained SEN on disk: enough for plumbing tests of SAP seats."""
    path = tmp_path / "sen.json"
    init_params(hidden=(8, 8), seed=0).save(path)
    return path
