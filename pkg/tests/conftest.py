import numpy as np
import pytest


def dense_matrix(op, in_shape):
    """Matrix of a linear map built column by column from impulses."""
    n = int(np.prod(in_shape))
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        cols.append(np.ravel(op(e.reshape(in_shape))))
    return np.stack(cols, axis=1)


def adjoint_gap(fwd, adj, x, y):
    """Relative gap |<Ax, y> - <x, A^T y>| scaled by ||Ax|| ||y||."""
    ax = fwd(x)
    lhs = np.real(np.vdot(y, ax))
    rhs = np.real(np.vdot(adj(y), x))
    scale = np.linalg.norm(ax) * np.linalg.norm(y) + np.linalg.norm(x) * np.linalg.norm(adj(y))
    return abs(lhs - rhs) / max(scale, 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


ACCEPTANCE = {}


def record_criterion(num, title, ok, detail=""):
    """Store and print one pass/fail line for an acceptance criterion."""
    line = f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    ACCEPTANCE[num] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[num])
