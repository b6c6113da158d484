import pytest

from projlift.acceptance import warmup


@pytest.fixture(scope="session", autouse=True)
def compile_kernels():
    # pay the JIT cost once so per-test timings reflect the algorithms
    warmup()
