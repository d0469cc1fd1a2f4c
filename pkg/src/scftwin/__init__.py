"""Supply-chain finance digital twin.

A permissioned hash-chained ledger records trade credit among stakeholders,
a deterministic contract engine runs securitization and the other financing
services over it, and a health engine turns balance-sheet snapshots into
index classifications, alerts, risk scores and service recommendations.
"""

__version__ = "0.1.0"
