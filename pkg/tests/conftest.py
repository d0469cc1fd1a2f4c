import pytest
from fractions import Fraction

from scftwin.config import PlatformConfig
from scftwin.twin import FinancialTwin, default_actors


@pytest.fixture
def small_twin():
    """Two trading stakeholders, one investor, funded and ready at tick 1."""
    actors = default_actors(["alice", "bob"], investors=["inv1"], observers=["watcher"])
    twin = FinancialTwin(actors)
    twin.mint("alice", 1_000_000)
    twin.mint("bob", 1_000_000)
    twin.mint("spv", 5_000_000)
    twin.mint("inv1", 1_000_000)
    twin.commit()
    twin.advance_tick(1)
    return twin


def make_twin(stakeholders, investors=(), config=None):
    actors = default_actors(list(stakeholders), investors=list(investors))
    return FinancialTwin(actors, config or PlatformConfig())


@pytest.fixture
def funded_engine():
    """A bare contract engine with funded parties, no ledger in the way."""
    from scftwin.contracts import ContractEngine

    eng = ContractEngine(grace_ticks=5, mint_authority="bank", spv_id="spv")
    for sid in ("alice", "bob", "carol"):
        eng.register_actor(sid, stakeholder=True)
    for aid in ("spv", "bank", "inv1", "inv2", "factorco"):
        eng.register_actor(aid)
    eng.token_op("mint", "", "alice", 1_000_000, submitter="bank")
    eng.token_op("mint", "", "bob", 1_000_000, submitter="bank")
    eng.token_op("mint", "", "carol", 1_000_000, submitter="bank")
    eng.token_op("mint", "", "spv", 5_000_000, submitter="bank")
    eng.token_op("mint", "", "inv1", 1_000_000, submitter="bank")
    eng.token_op("mint", "", "inv2", 1_000_000, submitter="bank")
    eng.token_op("mint", "", "factorco", 1_000_000, submitter="bank")
    return eng


def frac(s) -> Fraction:
    return Fraction(str(s))
