"""Queue-manager script subset: parse, apply, serialize, and ACL evaluation.

A queue maps a named job channel to the node subset allowed to execute its
jobs (`acl_hosts`) and the users allowed to submit to it (`acl_users`).  The
grammar is line-oriented:

    line := "create queue" NAME
          | "set queue" NAME ATTR OP VALUE
          | blank
          | "#" comment

with OP one of ``=`` (assign) and ``+=`` (append, list attributes only).
Scripts are UTF-8 text; CRLF input is accepted, LF is canonical on output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

from .errors import (
    QmgrSyntaxError,
    TypeMismatchError,
    UnknownAttributeError,
    UnknownQueueError,
)

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_ATTR_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_CPUT_RE = re.compile(r"^(\d+):([0-5]\d):([0-5]\d)$")

#: Closed attribute set; anything else is a hard error so the command gateway
#: can rely on configuration scripts never smuggling unknown state.
LIST_ATTRIBUTES = ("acl_hosts", "acl_users")
BOOL_ATTRIBUTES = ("acl_host_enable", "acl_user_enable", "enabled", "started")
ATTRIBUTES = (
    "queue_type",
    "acl_host_enable",
    "acl_hosts",
    "acl_user_enable",
    "acl_users",
    "resources_max.cput",
    "enabled",
    "started",
)


class Verb(Enum):
    CREATE = "create"
    SET = "set"


class ListOp(Enum):
    ASSIGN = "="
    APPEND = "+="


@dataclass(frozen=True)
class Directive:
    """One parsed script line.

    CREATE directives carry only the queue name; SET directives carry all of
    attribute, operator, and value.
    """

    verb: Verb
    queue_name: str
    attribute: Optional[str] = None
    operator: Optional[ListOp] = None
    value: Optional[str] = None

    def __post_init__(self):
        if self.verb is Verb.CREATE:
            if self.attribute or self.operator or self.value:
                raise ValueError("create directive takes no attribute")
        else:
            if not (self.attribute and self.operator and self.value is not None):
                raise ValueError("set directive needs attribute, operator, value")


def parse_duration(text: str) -> int:
    """HH:MM:SS with seconds resolution; returns total seconds (> 0)."""
    m = _CPUT_RE.match(text)
    if not m:
        raise TypeMismatchError(f"bad duration {text!r}, expected HH:MM:SS")
    seconds = int(m.group(1)) * 3600 + int(m.group(2)) * 60 + int(m.group(3))
    if seconds <= 0:
        raise TypeMismatchError("cpu-time cap must be positive")
    return seconds


def format_duration(seconds: int) -> str:
    h, rest = divmod(seconds, 3600)
    m, s = divmod(rest, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


@dataclass
class QueueConfig:
    """One queue: the embodiment of a block's node/user mapping."""

    name: str
    queue_type: str = "Execution"
    acl_host_enable: bool = False
    acl_hosts: list[str] = field(default_factory=list)
    acl_user_enable: bool = False
    acl_users: list[str] = field(default_factory=list)
    resources_max_cput: Optional[int] = None  # seconds; None means uncapped
    enabled: bool = False
    started: bool = False

    def copy(self) -> "QueueConfig":
        return replace(self, acl_hosts=list(self.acl_hosts), acl_users=list(self.acl_users))


@dataclass(frozen=True)
class AccessDecision:
    """ALLOW or DENY(reason) verdict for a submission attempt."""

    allowed: bool
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.allowed


ALLOW = AccessDecision(True)


def deny(reason: str) -> AccessDecision:
    return AccessDecision(False, reason)


class QueueStore:
    """Immutable-by-convention map of queue name to QueueConfig.

    Transition functions (`apply`) return a new store; holders that need a
    mutable slot wrap one in StoreRef.
    """

    def __init__(self, queues: Optional[dict[str, QueueConfig]] = None):
        self.queues: dict[str, QueueConfig] = queues or {}

    def get(self, name: str) -> QueueConfig:
        try:
            return self.queues[name]
        except KeyError:
            raise UnknownQueueError(f"no queue named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.queues

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QueueStore) and self.queues == other.queues

    def copy(self) -> "QueueStore":
        return QueueStore({n: q.copy() for n, q in self.queues.items()})


class StoreRef:
    """Mutable holder for the current QueueStore snapshot."""

    def __init__(self, store: Optional[QueueStore] = None):
        self.store = store or QueueStore()

    def update(self, store: QueueStore) -> None:
        self.store = store


def parse_script(text: str) -> list[Directive]:
    """Parse a whole script into directives, in line order.

    Blank lines and ``#`` comments are skipped; every other line either
    yields exactly one directive or raises QmgrSyntaxError with its 1-based
    line number.
    """
    directives = []
    for line_no, raw_line in enumerate(text.split("\n"), start=1):
        line = raw_line.rstrip("\r").strip()
        if not line or line.startswith("#"):
            continue
        directives.append(_parse_line(line, line_no))
    return directives


def _parse_line(line: str, line_no: int) -> Directive:
    tokens = line.split()
    verb = tokens[0]
    if verb not in ("create", "set"):
        raise QmgrSyntaxError(line_no, f"unknown verb {verb!r}")
    if len(tokens) < 2 or tokens[1] != "queue":
        raise QmgrSyntaxError(line_no, f"expected 'queue' after {verb!r}")
    if len(tokens) < 3:
        raise QmgrSyntaxError(line_no, "missing queue name")
    name = tokens[2]
    if not _NAME_RE.match(name):
        raise QmgrSyntaxError(line_no, f"invalid queue name {name!r}")

    if verb == "create":
        if len(tokens) > 3:
            raise QmgrSyntaxError(line_no, "trailing tokens after queue name")
        return Directive(Verb.CREATE, name)

    if len(tokens) < 4:
        raise QmgrSyntaxError(line_no, "missing attribute")
    attribute = tokens[3]
    if not _ATTR_RE.match(attribute):
        raise QmgrSyntaxError(line_no, f"invalid attribute {attribute!r}")
    if len(tokens) < 5:
        raise QmgrSyntaxError(line_no, "missing operator")
    try:
        operator = ListOp(tokens[4])
    except ValueError:
        raise QmgrSyntaxError(line_no, f"bad operator {tokens[4]!r}") from None
    if len(tokens) < 6:
        raise QmgrSyntaxError(line_no, "missing value")
    if len(tokens) > 6:
        raise QmgrSyntaxError(line_no, "trailing tokens after value")
    return Directive(Verb.SET, name, attribute, operator, tokens[5])


def _parse_bool(value: str) -> bool:
    # Exactly True/False, case-sensitive.
    if value == "True":
        return True
    if value == "False":
        return False
    raise TypeMismatchError(f"expected True or False, got {value!r}")


def apply(store: QueueStore, directive: Directive) -> QueueStore:
    """Apply one directive, returning a new store.

    CREATE adds a queue with inactive defaults (re-creating an existing queue
    is a no-op so replayed scripts stay idempotent).  SET-ASSIGN replaces the
    attribute; SET-APPEND appends to a list attribute, ignoring exact
    duplicates.
    """
    new = store.copy()
    if directive.verb is Verb.CREATE:
        if directive.queue_name not in new:
            new.queues[directive.queue_name] = QueueConfig(name=directive.queue_name)
        return new

    queue = new.get(directive.queue_name)
    attr, op, value = directive.attribute, directive.operator, directive.value

    if attr in LIST_ATTRIBUTES:
        items = queue.acl_hosts if attr == "acl_hosts" else queue.acl_users
        if op is ListOp.ASSIGN:
            items[:] = [value]
        elif value not in items:
            items.append(value)
        return new

    if op is ListOp.APPEND:
        raise TypeMismatchError(f"cannot append to {attr!r}")

    if attr == "queue_type":
        if value != "Execution":
            raise TypeMismatchError(f"unsupported queue type {value!r}")
        queue.queue_type = value
    elif attr in BOOL_ATTRIBUTES:
        setattr(queue, attr, _parse_bool(value))
    elif attr == "resources_max.cput":
        queue.resources_max_cput = parse_duration(value)
    else:
        raise UnknownAttributeError(f"unknown attribute {attr!r}")
    return new


def apply_script(store: QueueStore, text: str) -> QueueStore:
    for directive in parse_script(text):
        store = apply(store, directive)
    return store


def serialize(store: QueueStore) -> str:
    """Emit every queue as a directive block in canonical attribute order.

    parse_script + apply over the output reproduces an equal store.
    """
    blocks = []
    for queue in store.queues.values():
        lines = [f"create queue {queue.name}"]

        def emit(attr: str, op: str, value: str) -> None:
            lines.append(f"set queue {queue.name} {attr} {op} {value}")

        emit("queue_type", "=", queue.queue_type)
        emit("acl_host_enable", "=", str(queue.acl_host_enable))
        for i, host in enumerate(queue.acl_hosts):
            emit("acl_hosts", "=" if i == 0 else "+=", host)
        emit("acl_user_enable", "=", str(queue.acl_user_enable))
        for i, user in enumerate(queue.acl_users):
            emit("acl_users", "=" if i == 0 else "+=", user)
        if queue.resources_max_cput is not None:
            emit("resources_max.cput", "=", format_duration(queue.resources_max_cput))
        emit("enabled", "=", str(queue.enabled))
        emit("started", "=", str(queue.started))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


def admits_user(store: QueueStore, queue_name: str, user: str) -> AccessDecision:
    """ALLOW iff the queue is enabled, started, and the user passes its ACL.

    A disabled user ACL admits everyone; an enabled one admits exactly the
    listed users.
    """
    queue = store.get(queue_name)
    if not queue.enabled:
        return deny("queue disabled")
    if not queue.started:
        return deny("queue not started")
    if queue.acl_user_enable and user not in queue.acl_users:
        return deny("not in user ACL")
    return ALLOW


def dispatch_targets(store: QueueStore, queue_name: str) -> list[str]:
    """The only node set the scheduler may use for this queue.

    Returns the host list verbatim, in configured order, regardless of
    acl_host_enable (which gates submission origin, not dispatch).
    """
    return list(store.get(queue_name).acl_hosts)


def directives_for_block(
    queue_name: str,
    nodes: Iterable[str],
    owner: str,
    cput_seconds: Optional[int],
) -> str:
    """Render the canonical activation script for one block's queue."""
    lines = [
        f"create queue {queue_name}",
        f"set queue {queue_name} queue_type = Execution",
        f"set queue {queue_name} acl_host_enable = False",
    ]
    for i, node in enumerate(nodes):
        op = "=" if i == 0 else "+="
        lines.append(f"set queue {queue_name} acl_hosts {op} {node}")
    lines.append(f"set queue {queue_name} acl_user_enable = True")
    lines.append(f"set queue {queue_name} acl_users = {owner}")
    if cput_seconds is not None:
        lines.append(
            f"set queue {queue_name} resources_max.cput = {format_duration(cput_seconds)}"
        )
    lines.append(f"set queue {queue_name} enabled = True")
    lines.append(f"set queue {queue_name} started = True")
    return "\n".join(lines) + "\n"
