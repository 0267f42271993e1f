import pytest

from tempolink import tensor as tl


@pytest.fixture(autouse=True)
def _numeric_contracts():
    """Run every test with finite checks on and 64-bit precision restored."""
    tl.set_debug_checks(True)
    tl.set_default_precision(64)
    yield
    tl.set_debug_checks(False)
    tl.set_default_precision(64)
