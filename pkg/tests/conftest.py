import numpy as np
import pytest

from dpaudit import _kernels
from dpaudit.rng import stream_keys_array

_acceptance_key = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_acceptance_key] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance_key, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns ``ok`` so tests can ``assert`` it."""
    lines = request.config.stash[_acceptance_key]

    def report(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def batch_outputs(kind, n, x, b, seed, trials, side=0):
    """Privatized outputs for many audit trials at once, shape (trials, n).

    Uses the numpy kernel's lane layout, which ``test_backends`` checks
    against the scalar mechanism API.
    """
    t = np.arange(trials, dtype=np.uint64)
    sid = (t << np.uint64(2)) | np.uint64(side << 1)
    return _kernels._coords_numpy(kind, stream_keys_array(seed, sid), n, float(x), float(b))
