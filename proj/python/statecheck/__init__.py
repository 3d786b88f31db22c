"""Black-box checker for transactional isolation levels and session guarantees."""

import json

from . import _statecheck
from ._statecheck import StatecheckError

__all__ = [
    "StatecheckError",
    "check_isolation",
    "check_session",
    "crosscheck",
    "digest",
    "generate",
    "normalize",
    "phenomena",
    "pl_check",
]


def _text(history):
    return history if isinstance(history, str) else json.dumps(history)


def _verdict(raw):
    out = dict(raw)
    if "witness" in out:
        out["witness"] = json.loads(out["witness"])
    return out


def normalize(history):
    return _statecheck.normalize(_text(history))


def digest(history):
    return _statecheck.digest(_text(history))


def check_isolation(history, level, node_limit=1_000_000):
    """Verdict dict with outcome, satisfied, diagnosis and, when satisfied, witness."""
    return _verdict(_statecheck.check_isolation(_text(history), level, node_limit))


def check_session(history, guarantees, node_limit=1_000_000):
    if not isinstance(guarantees, str):
        guarantees = ",".join(guarantees)
    return _verdict(_statecheck.check_session(_text(history), guarantees, node_limit))


def pl_check(history, level):
    return _statecheck.pl_check(_text(history), level)


def phenomena(history):
    return _statecheck.phenomena(_text(history))


def generate(sessions=2, txns=3, ops=3, keys=2, read_fraction=0.5, seed=0, level=None):
    return json.loads(_statecheck.generate(sessions, txns, ops, keys, read_fraction, seed, level or ""))


def crosscheck(txns=3, ops=2, keys=2, sessions=2, levels=("ser",)):
    return json.loads(_statecheck.crosscheck(txns, ops, keys, sessions, list(levels)))
