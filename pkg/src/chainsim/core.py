"""Core domain types: values, type tags, contracts, environments, operations.

Everything here is an immutable value. State changes are expressed by
building new values (`Environment.updated`, `dataclasses.replace`), so any
snapshot taken before an update stays valid; transaction revert is "keep the
old environment".
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, Optional, Union

if TYPE_CHECKING:
    from .features import FeatureSet

# Addresses are opaque tokens; amounts are mutez in the unsigned 64-bit range.
Address = str
Amount = int
Timestamp = int

MAX_MUTEZ = 2**64 - 1


class AmountError(ValueError):
    """Checked mutez arithmetic went out of the 64-bit unsigned range."""


def check_address(token: str) -> str:
    if not isinstance(token, str) or not token or any(c.isspace() for c in token):
        raise ValueError(f"invalid address token: {token!r}")
    return token


def check_amount(n: int) -> int:
    if not isinstance(n, int) or isinstance(n, bool) or n < 0 or n > MAX_MUTEZ:
        raise AmountError(f"amount out of range: {n!r}")
    return n


def amount_add(a: int, b: int) -> int:
    return check_amount(check_amount(a) + check_amount(b))


def amount_sub(a: int, b: int) -> int:
    return check_amount(check_amount(a) - check_amount(b))


# ---------------------------------------------------------------------------
# Type tags
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeTag:
    """Structural type of a runtime value.

    `kind` is one of unit/nat/int/bool/string/mutez/address/pair/list/union;
    pair takes two args, list one, union any number of alternatives. Union is
    a type-level construct only (declarations such as multi-entrypoint
    parameter types); inference never produces it.
    """

    kind: str
    args: tuple["TypeTag", ...] = ()


UNIT = TypeTag("unit")
NAT = TypeTag("nat")
INT = TypeTag("int")
BOOL = TypeTag("bool")
STRING = TypeTag("string")
MUTEZ = TypeTag("mutez")
ADDRESS = TypeTag("address")


def pair_t(left: TypeTag, right: TypeTag) -> TypeTag:
    return TypeTag("pair", (left, right))


def list_t(elem: TypeTag) -> TypeTag:
    return TypeTag("list", (elem,))


def union_t(*alternatives: TypeTag) -> TypeTag:
    if not alternatives:
        raise ValueError("union needs at least one alternative")
    return TypeTag("union", tuple(alternatives))


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitV:
    pass


@dataclass(frozen=True)
class NatV:
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 0:
            raise ValueError(f"nat payload must be a non-negative int: {self.n!r}")


@dataclass(frozen=True)
class IntV:
    i: int

    def __post_init__(self) -> None:
        if not isinstance(self.i, int) or isinstance(self.i, bool):
            raise ValueError(f"int payload must be an int: {self.i!r}")


@dataclass(frozen=True)
class BoolV:
    b: bool

    def __post_init__(self) -> None:
        if not isinstance(self.b, bool):
            raise ValueError(f"bool payload must be a bool: {self.b!r}")


@dataclass(frozen=True)
class StringV:
    s: str

    def __post_init__(self) -> None:
        if not isinstance(self.s, str):
            raise ValueError(f"string payload must be a str: {self.s!r}")


@dataclass(frozen=True)
class MutezV:
    mutez: int

    def __post_init__(self) -> None:
        check_amount(self.mutez)


@dataclass(frozen=True)
class AddressV:
    addr: str

    def __post_init__(self) -> None:
        check_address(self.addr)


@dataclass(frozen=True)
class PairV:
    left: "Value"
    right: "Value"


@dataclass(frozen=True)
class ListV:
    items: tuple["Value", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if self.items:
            head = value_type(self.items[0])
            for item in self.items[1:]:
                if value_type(item) != head:
                    raise ValueError("list elements must share one type")


Value = Union[UnitV, NatV, IntV, BoolV, StringV, MutezV, AddressV, PairV, ListV]

UNIT_VALUE = UnitV()


def value_type(v: Value) -> TypeTag:
    """Most specific tag inhabited by `v`. Empty lists infer as list unit."""
    if isinstance(v, UnitV):
        return UNIT
    if isinstance(v, NatV):
        return NAT
    if isinstance(v, IntV):
        return INT
    if isinstance(v, BoolV):
        return BOOL
    if isinstance(v, StringV):
        return STRING
    if isinstance(v, MutezV):
        return MUTEZ
    if isinstance(v, AddressV):
        return ADDRESS
    if isinstance(v, PairV):
        return pair_t(value_type(v.left), value_type(v.right))
    if isinstance(v, ListV):
        return list_t(value_type(v.items[0]) if v.items else UNIT)
    raise TypeError(f"not a value: {v!r}")


def value_typecheck(v: Value, t: TypeTag) -> bool:
    """True iff `v` structurally inhabits `t`. Total; never raises on values."""
    if t.kind == "unit":
        return isinstance(v, UnitV)
    if t.kind == "nat":
        return isinstance(v, NatV)
    if t.kind == "int":
        return isinstance(v, IntV)
    if t.kind == "bool":
        return isinstance(v, BoolV)
    if t.kind == "string":
        return isinstance(v, StringV)
    if t.kind == "mutez":
        return isinstance(v, MutezV)
    if t.kind == "address":
        return isinstance(v, AddressV)
    if t.kind == "pair":
        return (
            isinstance(v, PairV)
            and value_typecheck(v.left, t.args[0])
            and value_typecheck(v.right, t.args[1])
        )
    if t.kind == "list":
        return isinstance(v, ListV) and all(
            value_typecheck(item, t.args[0]) for item in v.items
        )
    if t.kind == "union":
        return any(value_typecheck(v, alt) for alt in t.args)
    raise ValueError(f"unknown type tag kind: {t.kind!r}")


def _escape(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\t", "\\t")


def render_value(v: Value) -> str:
    """Render a value in scenario literal syntax.

    Non-negative IntV renders as a bare integer, which re-parses as NatV;
    every other value round-trips through the scenario parser.
    """
    if isinstance(v, UnitV):
        return "unit"
    if isinstance(v, NatV):
        return str(v.n)
    if isinstance(v, IntV):
        return str(v.i)
    if isinstance(v, BoolV):
        return "true" if v.b else "false"
    if isinstance(v, StringV):
        return f'"{_escape(v.s)}"'
    if isinstance(v, MutezV):
        return f"mutez {v.mutez}"
    if isinstance(v, AddressV):
        return f"@{v.addr}"
    if isinstance(v, PairV):
        return f"(pair {render_value(v.left)} {render_value(v.right)})"
    if isinstance(v, ListV):
        return "[" + ", ".join(render_value(item) for item in v.items) + "]"
    raise TypeError(f"not a value: {v!r}")


def nest_values(values: tuple[Value, ...] | list[Value]) -> Value:
    """Fold an argument list into a right-nested pair chain (empty -> unit)."""
    values = tuple(values)
    if not values:
        return UNIT_VALUE
    if len(values) == 1:
        return values[0]
    return PairV(values[0], nest_values(values[1:]))


def make_param(entrypoint: str, *args: Value) -> Value:
    """Uniform invocation parameter: (entrypoint name, right-nested args)."""
    return PairV(StringV(entrypoint), nest_values(args))


# ---------------------------------------------------------------------------
# Contracts and environments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Contract:
    """An installed contract. Only storage and balance ever change; code_key,
    the type tags, config and the contextual flag are fixed at creation."""

    param_type: TypeTag
    storage_type: TypeTag
    storage: Value
    balance: int
    code_key: str
    config: Value
    contextual: bool = False

    def __post_init__(self) -> None:
        check_amount(self.balance)
        if not value_typecheck(self.storage, self.storage_type):
            raise ValueError(
                f"storage {render_value(self.storage)} does not inhabit its declared type"
            )

    def with_balance(self, balance: int) -> "Contract":
        return replace(self, balance=check_amount(balance))

    def with_storage(self, storage: Value) -> "Contract":
        return replace(self, storage=storage)


@dataclass(frozen=True)
class Environment:
    """Partial map address -> contract. Updates copy; old snapshots stay valid.

    The backing dict is owned by the instance and must not be mutated.
    """

    accounts: dict[str, Contract] = field(default_factory=dict)

    def get(self, addr: str) -> Optional[Contract]:
        return self.accounts.get(addr)

    def __contains__(self, addr: str) -> bool:
        return addr in self.accounts

    def addresses(self) -> tuple[str, ...]:
        return tuple(sorted(self.accounts))

    def updated(self, addr: str, contract: Contract) -> "Environment":
        accounts = dict(self.accounts)
        accounts[check_address(addr)] = contract
        return Environment(accounts)

    def total_balance(self) -> int:
        total = 0
        for contract in self.accounts.values():
            total = amount_add(total, contract.balance)
        return total


def env_update(env: Environment, addr: str, contract: Contract) -> Environment:
    return env.updated(addr, contract)


def env_total_balance(env: Environment) -> int:
    return env.total_balance()


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transfer:
    dest: str
    amount: int
    param: Value

    def __post_init__(self) -> None:
        check_address(self.dest)
        check_amount(self.amount)


@dataclass(frozen=True)
class CreateContract:
    addr: str
    amount: int
    storage: Value
    code_key: str
    config: Value

    def __post_init__(self) -> None:
        check_address(self.addr)
        check_amount(self.amount)


@dataclass(frozen=True)
class AtomicBundle:
    ops: tuple["Operation", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))


@dataclass(frozen=True)
class ContextBundle:
    ops: tuple["Operation", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))


@dataclass(frozen=True)
class Restricted:
    """Narrows the invocable address universe for the wrapped operations.

    At most one of allow/block may be non-empty per wrapper; nesting composes.
    """

    ops: tuple["Operation", ...] = ()
    allow: Optional[frozenset[str]] = None
    block: Optional[frozenset[str]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.allow is not None:
            object.__setattr__(self, "allow", frozenset(self.allow))
        if self.block is not None:
            object.__setattr__(self, "block", frozenset(self.block))
        if self.allow and self.block:
            raise ValueError("a restriction wrapper takes allow or block, not both")


@dataclass(frozen=True)
class EndInteractions:
    pass


Operation = Union[
    Transfer, CreateContract, AtomicBundle, ContextBundle, Restricted, EndInteractions
]

WRAPPER_OPS = (AtomicBundle, ContextBundle, Restricted)


# ---------------------------------------------------------------------------
# Execution contexts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RestrictionState:
    """Allow/block address sets inherited down a transaction tree.

    allow=None means the full universe. Child states only ever shrink allow
    and grow block (see features.narrow_restrictions).
    """

    allow: Optional[frozenset[str]] = None
    block: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ExecutionContext:
    """Who emitted the operation (sender), who authored the transaction
    (source), and the transaction-scoped control state."""

    sender: str
    source: str
    restrictions: RestrictionState = RestrictionState()
    end_interactions_owner: Optional[str] = None
    level: int = 0


@dataclass(frozen=True)
class PendingOp:
    """An operation queued with its execution context. `parent` is the trace
    node id of the emitting execution (None for externally submitted ops)."""

    op: Operation
    ectx: ExecutionContext
    parent: Optional[int] = None


@dataclass(frozen=True)
class CallContext:
    """Everything a contract body may observe about the chain.

    Bodies are deterministic functions of (CallContext, param, storage); the
    view/pending_balance capabilities close over a fixed snapshot and are the
    only way to read other contracts.
    """

    self_addr: str
    sender: str
    source: str
    amount: int
    self_balance: int
    level: int
    config: Value
    features: "FeatureSet"
    view: Callable[[str], Value] = field(compare=False, repr=False, default=None)  # type: ignore[assignment]
    pending_balance: Callable[[str], int] = field(compare=False, repr=False, default=None)  # type: ignore[assignment]
