import copy
import random

import pytest

from chainsim.core import (
    CreateContract,
    ExecutionContext,
    NatV,
    PendingOp,
    Transfer,
    UNIT_VALUE,
    make_param,
)
from chainsim.executor import (
    ADDRESS_OCCUPIED,
    CONTRACT_FAILURE,
    END_INTERACTIONS_VIOLATION,
    FEATURE_DISABLED,
    INSUFFICIENT_BALANCE,
    RESTRICTION_VIOLATION,
    TYPE_MISMATCH,
    UNKNOWN_ADDRESS,
    UNKNOWN_CODE_KEY,
    ExecError,
    execute_operation,
    pending_balance,
    view_storage,
)
from chainsim.core import EndInteractions, RestrictionState
from chainsim.features import FeatureSet

FEATURES = FeatureSet()
ALL_FEATURES = FeatureSet.all_on()


def _ectx(sender, **kw):
    return ExecutionContext(sender=sender, source=kw.pop("source", sender), **kw)


def _expect_error(kind, fn, *args, **kw):
    with pytest.raises(ExecError) as err:
        fn(*args, **kw)
    assert err.value.kind == kind
    return err.value


class TestTransfer:
    def test_moves_funds_and_runs_body(self, vault_env):
        # The vault pays its owner 5; the owner's receive entrypoint runs.
        op = Transfer("bad", 5, make_param("default"))
        out = execute_operation(_ectx("vault"), op, vault_env, FEATURES)
        assert out.emitter == "bad"
        assert out.emitted == ()
        assert out.env_after.get("vault").balance == 10
        assert out.env_after.get("bad").balance == 5
        # input environment untouched
        assert vault_env.get("vault").balance == 15

    def test_zero_amount_no_change(self, simple_env):
        op = Transfer("bob", 0, make_param("default"))
        out = execute_operation(_ectx("alice"), op, simple_env, FEATURES)
        assert out.env_after.get("alice").balance == 100
        assert out.env_after.get("bob").balance == 50
        assert out.env_after.get("bob").storage == UNIT_VALUE

    def test_withdraw_guard_sees_unexecuted_payouts(self, vault_env):
        # Pending payouts have not debited the vault, so a third withdrawal
        # still sees balance 15 and passes 15 - 5 > 9.
        op = Transfer("vault", 0, make_param("withdraw", NatV(5)))
        out = execute_operation(_ectx("bad"), op, vault_env, FEATURES)
        assert out.env_after.get("vault").balance == 15
        assert out.emitted == (Transfer("bad", 5, make_param("default")),)

    def test_absent_destination(self, simple_env):
        op = Transfer("nobody", 1, make_param("default"))
        _expect_error(
            UNKNOWN_ADDRESS, execute_operation, _ectx("alice"), op, simple_env, FEATURES
        )

    def test_absent_sender(self, simple_env):
        op = Transfer("bob", 1, make_param("default"))
        _expect_error(
            UNKNOWN_ADDRESS, execute_operation, _ectx("ghost"), op, simple_env, FEATURES
        )

    def test_insufficient_balance(self, simple_env):
        op = Transfer("alice", 51, make_param("default"))
        _expect_error(
            INSUFFICIENT_BALANCE,
            execute_operation,
            _ectx("bob"),
            op,
            simple_env,
            FEATURES,
        )

    def test_param_type_gate(self, simple_env):
        op = Transfer("bob", 0, NatV(5))
        _expect_error(
            TYPE_MISMATCH, execute_operation, _ectx("alice"), op, simple_env, FEATURES
        )

    def test_self_transfer_allowed(self, simple_env):
        op = Transfer("alice", 10, make_param("default"))
        out = execute_operation(_ectx("alice"), op, simple_env, FEATURES)
        assert out.env_after.get("alice").balance == 100

    def test_body_failure_reports_message(self, vault_env):
        op = Transfer("vault", 0, make_param("withdraw", NatV(5)))
        err = _expect_error(
            CONTRACT_FAILURE, execute_operation, _ectx("owner"), op, vault_env, FEATURES
        )
        assert "not owner" in err.detail

    def test_blocked_destination(self, simple_env):
        ectx = _ectx("alice", restrictions=RestrictionState(block=frozenset({"bob"})))
        op = Transfer("bob", 1, make_param("default"))
        _expect_error(
            RESTRICTION_VIOLATION, execute_operation, ectx, op, simple_env, FEATURES
        )

    def test_allow_list_excludes_everything_else(self, simple_env):
        ectx = _ectx("alice", restrictions=RestrictionState(allow=frozenset({"fwd"})))
        op = Transfer("bob", 1, make_param("default"))
        _expect_error(
            RESTRICTION_VIOLATION, execute_operation, ectx, op, simple_env, FEATURES
        )

    def test_end_mode_gate(self, simple_env):
        ectx = _ectx("alice", end_interactions_owner="alice")
        ok = Transfer("alice", 1, make_param("default"))
        out = execute_operation(ectx, ok, simple_env, FEATURES)
        assert out.env_after.get("alice").balance == 100
        bad = Transfer("bob", 1, make_param("default"))
        _expect_error(
            END_INTERACTIONS_VIOLATION,
            execute_operation,
            ectx,
            bad,
            simple_env,
            FEATURES,
        )

    def test_credit_visible_to_body(self, simple_env):
        # forwarder records believed balance including the incoming credit
        op = Transfer("fwd", 7, make_param("default"))
        out = execute_operation(_ectx("alice"), op, simple_env, FEATURES)
        assert out.env_after.get("fwd").storage == NatV(37)
        assert out.env_after.get("fwd").balance == 37


class TestCreate:
    def _op(self, **kw):
        defaults = dict(
            addr="fresh",
            amount=5,
            storage=UNIT_VALUE,
            code_key="receiver",
            config=UNIT_VALUE,
        )
        defaults.update(kw)
        return CreateContract(**defaults)

    def test_installs_with_endowment(self, simple_env):
        out = execute_operation(_ectx("alice"), self._op(), simple_env, FEATURES)
        assert out.emitter == "alice"
        assert out.emitted == ()
        created = out.env_after.get("fresh")
        assert created.balance == 5
        assert created.code_key == "receiver"
        assert out.env_after.get("alice").balance == 95

    def test_occupied_address(self, simple_env):
        _expect_error(
            ADDRESS_OCCUPIED,
            execute_operation,
            _ectx("alice"),
            self._op(addr="bob"),
            simple_env,
            FEATURES,
        )

    def test_create_at_creator_address(self, simple_env):
        _expect_error(
            ADDRESS_OCCUPIED,
            execute_operation,
            _ectx("alice"),
            self._op(addr="alice"),
            simple_env,
            FEATURES,
        )

    def test_unknown_code_key(self, simple_env):
        _expect_error(
            UNKNOWN_CODE_KEY,
            execute_operation,
            _ectx("alice"),
            self._op(code_key="no_such_code"),
            simple_env,
            FEATURES,
        )

    def test_ill_typed_storage(self, simple_env):
        _expect_error(
            TYPE_MISMATCH,
            execute_operation,
            _ectx("alice"),
            self._op(storage=NatV(1)),
            simple_env,
            FEATURES,
        )

    def test_insufficient_endowment(self, simple_env):
        _expect_error(
            INSUFFICIENT_BALANCE,
            execute_operation,
            _ectx("alice"),
            self._op(amount=101),
            simple_env,
            FEATURES,
        )


class TestEndInteractions:
    def test_requires_feature(self, simple_env):
        _expect_error(
            END_INTERACTIONS_VIOLATION,
            execute_operation,
            _ectx("alice"),
            EndInteractions(),
            simple_env,
            FEATURES,
        )

    def test_activation_and_reactivation(self, simple_env):
        out = execute_operation(
            _ectx("alice"), EndInteractions(), simple_env, ALL_FEATURES
        )
        assert out.emitted == () and out.env_after is simple_env
        same_owner = _ectx("alice", end_interactions_owner="alice")
        execute_operation(same_owner, EndInteractions(), simple_env, ALL_FEATURES)
        other = _ectx("bob", end_interactions_owner="alice")
        _expect_error(
            END_INTERACTIONS_VIOLATION,
            execute_operation,
            other,
            EndInteractions(),
            simple_env,
            ALL_FEATURES,
        )


class TestViews:
    def test_reads_current_storage(self, vault_env):
        assert view_storage(vault_env, "vault", ALL_FEATURES) == UNIT_VALUE

    def test_absent_address(self, vault_env):
        _expect_error(UNKNOWN_ADDRESS, view_storage, vault_env, "ghost", ALL_FEATURES)

    def test_feature_off(self, vault_env):
        _expect_error(FEATURE_DISABLED, view_storage, vault_env, "vault", FEATURES)


def _pending_transfer(sender, dest, amount):
    return PendingOp(
        Transfer(dest, amount, make_param("default")), _ectx(sender), None
    )


class TestPendingBalance:
    def test_vault_with_three_payouts(self, vault_env):
        pending = [_pending_transfer("vault", "bad", 5) for _ in range(3)]
        assert pending_balance(vault_env, "vault", pending, ALL_FEATURES) == 0

    def test_empty_queue_equals_balance(self, vault_env):
        assert pending_balance(vault_env, "vault", [], ALL_FEATURES) == 15

    def test_incoming_not_added(self, vault_env):
        pending = [_pending_transfer("vault", "bad", 5)]
        assert pending_balance(vault_env, "bad", pending, ALL_FEATURES) == 0

    def test_mismatch_while_transfers_pending(self, simple_env):
        # Queue shaped as [C..., A->B transfers]: while the payouts are
        # pending, the observable sum over {A, B} undershoots the real sum.
        env = simple_env
        a, b = "alice", "bob"
        pending = [
            _pending_transfer(a, b, 10),
            _pending_transfer(a, b, 5),
        ]
        real_sum = env.get(a).balance + env.get(b).balance
        observed = pending_balance(env, a, pending, ALL_FEATURES) + pending_balance(
            env, b, pending, ALL_FEATURES
        )
        assert observed == real_sum - 15
        assert observed < real_sum

    def test_counts_transfers_inside_wrappers(self, vault_env):
        from chainsim.core import AtomicBundle, Restricted

        inner = Transfer("bad", 5, make_param("default"))
        wrapped = PendingOp(
            AtomicBundle((inner, Restricted((inner,), block=frozenset()))),
            _ectx("vault"),
            None,
        )
        assert pending_balance(vault_env, "vault", [wrapped], ALL_FEATURES) == 5

    def test_feature_off(self, vault_env):
        _expect_error(FEATURE_DISABLED, pending_balance, vault_env, "vault", [], FEATURES)

    def test_can_go_negative(self, simple_env):
        pending = [_pending_transfer("bob", "alice", 40), _pending_transfer("bob", "alice", 30)]
        assert pending_balance(simple_env, "bob", pending, ALL_FEATURES) == -20


class TestTransferCorrectness:
    """Listing-style transfer check against an independently computed oracle:
    deltas are exactly (-send, +send) and the callee's storage equals what its
    body returns; failures leave zero deltas."""

    def test_thousand_random_cases(self, simple_env):
        rng = random.Random(20260810)
        violations = 0
        for _ in range(1000):
            caller = rng.choice(["alice", "bob"])
            callee = rng.choice(["alice", "bob", "fwd"])
            send = rng.randrange(0, 160)
            env = simple_env
            before_caller = env.get(caller).balance
            before_callee = env.get(callee).balance
            op = Transfer(callee, send, make_param("default"))
            try:
                out = execute_operation(_ectx(caller), op, env, FEATURES)
            except ExecError:
                # failure: no observable effect anywhere
                if env.get(caller).balance != before_caller:
                    violations += 1
                if env.get(callee).balance != before_callee:
                    violations += 1
                assert send > before_caller
                continue
            after_caller = out.env_after.get(caller).balance
            after_callee = out.env_after.get(callee).balance
            if caller == callee:
                if after_caller != before_caller:
                    violations += 1
            else:
                if after_caller != before_caller - send:
                    violations += 1
                if after_callee != before_callee + send:
                    violations += 1
            # independent storage oracle: receiver keeps storage, forwarder
            # adds the credited amount to its counter
            if callee == "fwd":
                expected = NatV(30 + send)
            else:
                expected = UNIT_VALUE
            if out.env_after.get(callee).storage != expected:
                violations += 1
        assert violations == 0


def test_code_immutability(vault_env):
    rng = random.Random(99)
    env = vault_env
    fingerprint = {
        addr: (c.code_key, c.param_type, c.storage_type, c.config)
        for addr, c in env.accounts.items()
    }
    ops = [
        Transfer("bad", 2, make_param("default")),
        Transfer("vault", 1, make_param("deposit")),
        Transfer("owner", 3, make_param("default")),
    ]
    for _ in range(50):
        op = rng.choice(ops)
        sender = rng.choice(["owner", "vault", "bad"])
        try:
            out = execute_operation(_ectx(sender), op, env, FEATURES)
        except ExecError:
            continue
        env = out.env_after
        for addr, (key, pt, st, cfg) in fingerprint.items():
            c = env.get(addr)
            assert (c.code_key, c.param_type, c.storage_type, c.config) == (
                key,
                pt,
                st,
                cfg,
            )
        assert all(c.balance >= 0 for c in env.accounts.values())


def test_failure_leaves_input_env_identical(simple_env):
    snapshot = copy.deepcopy(simple_env)
    op = Transfer("bob", 101, make_param("default"))
    with pytest.raises(ExecError):
        execute_operation(_ectx("alice"), op, simple_env, FEATURES)
    assert simple_env == snapshot
