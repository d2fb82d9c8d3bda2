"""Transaction trees and executable validators over them.

A tree records every operation a transaction touched: executed ops, expanded
wrappers, and at most one failing op. Node ids equal execution order (seq),
and parents always precede children.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import Environment, Value, render_value

STATUS_EXECUTED = "executed"
STATUS_EXPANDED = "expanded"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class TraceNode:
    id: int
    parent: Optional[int]
    seq: int
    sender: str
    kind: str  # transfer | create | end_interactions | atomic | context | restricted
    dest: Optional[str] = None
    amount: Optional[int] = None
    param: Optional[str] = None
    status: str = STATUS_EXECUTED
    deltas: tuple[tuple[str, int], ...] = ()
    commits: tuple[tuple[str, Value], ...] = ()


@dataclass(frozen=True)
class TransactionTree:
    nodes: tuple[TraceNode, ...]
    outcome: str  # "commit" | "revert"
    reason: Optional[str]
    ts: int
    # Rendered pending-queue snapshots; populated only when the scheduler is
    # asked to record them (golden tests and --step), empty otherwise.
    queue_states: tuple[str, ...] = ()

    @property
    def committed(self) -> bool:
        return self.outcome == "commit"


def node_to_json(node: TraceNode) -> dict:
    out: dict = {
        "id": node.id,
        "parent": node.parent,
        "seq": node.seq,
        "sender": node.sender,
        "kind": node.kind,
    }
    if node.dest is not None:
        out["dest"] = node.dest
    if node.amount is not None:
        out["amount"] = node.amount
    if node.param is not None:
        out["param"] = node.param
    out["status"] = node.status
    out["deltas"] = {addr: delta for addr, delta in node.deltas}
    out["commits"] = {addr: render_value(value) for addr, value in node.commits}
    return out


def tree_to_json(tree: TransactionTree) -> dict:
    out: dict = {"outcome": tree.outcome}
    if tree.reason is not None:
        out["reason"] = tree.reason
    out["ts"] = tree.ts
    out["nodes"] = [node_to_json(n) for n in tree.nodes]
    return out


# ---------------------------------------------------------------------------
# Validators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    invariant: str
    ok: bool
    violations: tuple[str, ...] = ()


def _balance_diff(env_before: Environment, env_after: Environment) -> dict[str, int]:
    diff: dict[str, int] = {}
    for addr in set(env_before.accounts) | set(env_after.accounts):
        before = env_before.get(addr)
        after = env_after.get(addr)
        b = before.balance if before is not None else 0
        a = after.balance if after is not None else 0
        if a != b:
            diff[addr] = a - b
    return diff


def validate_no_double_spend(
    tree: TransactionTree, env_before: Environment, env_after: Environment
) -> ValidationReport:
    """Every balance movement is explained by exactly one executed operation:
    per address, the environment delta equals the sum of node deltas."""
    if not tree.committed:
        raise ValueError("no-double-spend applies to committed transactions")
    claimed: dict[str, int] = {}
    for node in tree.nodes:
        for addr, delta in node.deltas:
            claimed[addr] = claimed.get(addr, 0) + delta
    actual = _balance_diff(env_before, env_after)
    violations = []
    for addr in sorted(set(claimed) | set(actual)):
        c = claimed.get(addr, 0)
        a = actual.get(addr, 0)
        if c != a:
            violations.append(
                f"@{addr}: environment moved {a} but trace accounts for {c}"
            )
    return ValidationReport("no_double_spend", not violations, tuple(violations))


def _contiguous(seqs: list[int]) -> bool:
    if len(seqs) <= 1:
        return True
    ordered = sorted(seqs)
    return ordered[-1] - ordered[0] + 1 == len(ordered)


def validate_atomic_bundles(
    tree: TransactionTree, emission_groups: bool = False
) -> ValidationReport:
    """Check that every atomic bundle's member operations executed
    back-to-back (consecutive seq indices, nothing foreign between them).

    A member that is itself a wrapper contributes its own expansion, so the
    check follows expansion edges recursively; operations a member merely
    EMITS are not part of the bundled sequence (under breadth-first order
    they lawfully run later). With emission_groups=True the same contiguity
    check also applies to the operations emitted by each single execution,
    including the externally submitted root group.
    """
    children: dict[Optional[int], list[TraceNode]] = {}
    for node in tree.nodes:
        children.setdefault(node.parent, []).append(node)

    def expansion_span(parent_id: Optional[int]) -> list[int]:
        seqs: list[int] = []
        for child in children.get(parent_id, []):
            seqs.append(child.seq)
            if child.status == STATUS_EXPANDED:
                seqs.extend(expansion_span(child.id))
        return seqs

    violations = []
    for node in tree.nodes:
        if node.kind == "atomic":
            seqs = expansion_span(node.id)
            if not _contiguous(seqs):
                violations.append(
                    f"bundle node {node.id}: members at seqs {sorted(seqs)} interleave"
                )
    if emission_groups:
        groups: list[tuple[str, Optional[int]]] = [("root", None)]
        for node in tree.nodes:
            if node.status == STATUS_EXECUTED:
                groups.append((f"node {node.id}", node.id))
        for label, parent_id in groups:
            seqs = expansion_span(parent_id)
            if not _contiguous(seqs):
                violations.append(
                    f"emission group of {label}: seqs {sorted(seqs)} interleave"
                )
    return ValidationReport("atomic_bundles", not violations, tuple(violations))


def validate_conservation(env_before: Environment, env_after: Environment) -> bool:
    """No mint, no burn: combined funds are constant."""
    return env_before.total_balance() == env_after.total_balance()


def validate_replay(
    tree: TransactionTree, env_before: Environment, env_after: Environment
) -> ValidationReport:
    """Replaying recorded deltas and storage commits over env_before must
    reproduce every balance and storage of env_after (code is checked by the
    executor's immutability rules, not here)."""
    if not tree.committed:
        raise ValueError("replay applies to committed transactions")
    balances = {addr: c.balance for addr, c in env_before.accounts.items()}
    storages = {addr: c.storage for addr, c in env_before.accounts.items()}
    for node in tree.nodes:
        for addr, delta in node.deltas:
            balances[addr] = balances.get(addr, 0) + delta
        for addr, value in node.commits:
            # A commit on an unseen address is a zero-endowment creation.
            balances.setdefault(addr, 0)
            storages[addr] = value
    violations = []
    for addr in sorted(set(balances) | set(env_after.accounts)):
        after = env_after.get(addr)
        if after is None:
            violations.append(f"@{addr}: replay creates an address the chain lacks")
            continue
        if balances.get(addr) != after.balance:
            violations.append(
                f"@{addr}: replayed balance {balances.get(addr)} != {after.balance}"
            )
        if storages.get(addr, after.storage) != after.storage:
            violations.append(f"@{addr}: replayed storage differs")
    return ValidationReport("trace_replay", not violations, tuple(violations))
