import pytest

from ihtc import _kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Absorb JIT compilation once so individual tests time only themselves."""
    _kernels.warmup()
