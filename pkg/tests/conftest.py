import pytest

from spinfer.core import Literal, load_system
from spinfer.datasets import gen_digits
from spinfer.fixpoint import RuleBase, enumerate_classes
from spinfer.miner import MinerConfig, mine_all

P1, P2 = Literal(0), Literal(1)
NP1, NP2 = -P1, -P2


@pytest.fixture
def t4():
    return load_system([[1, 1], [1, 1], [0, 0], [1, 0]])


@pytest.fixture(scope="session")
def digits_run():
    """Noiseless digits mined once per session (stepwise, alpha 0.05, depth 6)."""
    data = gen_digits(30)
    rs = mine_all(data.system, MinerConfig(max_premise_len=6, alpha=0.05))
    base = RuleBase.from_mined(rs.msr, data.system.n_objects)
    enum = enumerate_classes(data.system, base)
    return data, rs, base, enum


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one ``criterion: PASS/FAIL detail`` line; echoed in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines):
            terminalreporter.write_line(line)
