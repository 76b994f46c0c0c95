import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zkaudit.ledger import Ledger  # noqa: E402
from zkaudit.primitives import AddressKeyPair  # noqa: E402
from zkaudit.protocol import PublicParams, access, assign_owner, share, store  # noqa: E402

TEST_DEPTH = 4

# acceptance lines collected here are echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return PublicParams(TEST_DEPTH)


@pytest.fixture
def rng(request):
    return random.Random(request.node.name)


class Chain:
    """An honest store → assign → share → access history on a 3-replica ledger."""

    def __init__(self, params, seed=11):
        self.params = params
        self.rng = random.Random(seed)
        r = self.rng
        self.owner, self.provider, self.user, self.stranger = (AddressKeyPair.generate(r) for _ in range(4))
        self.ledger = Ledger(params, replicas=3)
        self.data = b"patient-record-0042"
        self.tk_str, self.rec_str = store(self.data, self.owner, self.provider.public, params, r)
        self.verdicts = [self.ledger.submit_and_seal(self.rec_str)]
        self.tk_own, self.rec_own = assign_owner(self.tk_str, self.provider, self.owner.public, self.ledger, params, r)
        self.verdicts.append(self.ledger.submit_and_seal(self.rec_own))
        self.tk_shr, self.rec_shr = share(self.tk_own, self.owner, self.user.public, 9, self.ledger, params, r)
        self.verdicts.append(self.ledger.submit_and_seal(self.rec_shr))
        self.tk_acc, self.rec_acc = access(self.tk_shr, self.user, self.provider.public, 3, self.ledger, params, r)
        self.verdicts.append(self.ledger.submit_and_seal(self.rec_acc))

    @property
    def records(self):
        return [self.rec_str, self.rec_own, self.rec_shr, self.rec_acc]


@pytest.fixture(scope="session")
def chain(params):
    return Chain(params)
