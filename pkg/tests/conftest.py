import pytest

from rankone import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the active backend once so timed tests measure the
    computation, not the JIT."""
    _kernels.warmup()
