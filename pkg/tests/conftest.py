import pytest

import sqwalk.logger


@pytest.fixture(autouse=True)
def _reset_shared_logger():
    """keep the module-level shared logger from leaking between tests"""
    sqwalk.logger._LOGGER = None
    yield
    sqwalk.logger._LOGGER = None
