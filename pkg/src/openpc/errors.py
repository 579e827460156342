"""Exception hierarchy for the whole toolkit.

Every domain error raised by a module lives here so the service layer can
map exception classes to HTTP statuses in one table.
"""

from __future__ import annotations


class OpenPCError(Exception):
    """Base class for all domain errors."""


# --- queue configuration ---------------------------------------------------

class QmgrSyntaxError(OpenPCError):
    """A script line does not match the queue-manager grammar."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class UnknownQueueError(OpenPCError):
    pass


class UnknownAttributeError(OpenPCError):
    pass


class TypeMismatchError(OpenPCError):
    pass


# --- block lifecycle -------------------------------------------------------

class UnknownUserError(OpenPCError):
    pass


class UserNotApprovedError(OpenPCError):
    pass


class InvalidPeriodError(OpenPCError):
    pass


class InvalidArgumentError(OpenPCError):
    pass


class UnknownBlockError(OpenPCError):
    pass


class UnknownRequestError(OpenPCError):
    pass


class AlreadyReviewedError(OpenPCError):
    pass


class NodesUnavailableError(OpenPCError):
    pass


class NoFreeNodesError(OpenPCError):
    pass


class WrongStateError(OpenPCError):
    pass


class NodeBootTimeoutError(OpenPCError):
    """A node did not reach UP within the activation timeout."""

    def __init__(self, node_id: str):
        super().__init__(f"node {node_id} did not boot in time")
        self.node_id = node_id


# --- node fabric -----------------------------------------------------------

class UnknownNodeError(OpenPCError):
    pass


class NodeNotUpError(OpenPCError):
    pass


class NodeBusyError(OpenPCError):
    pass


# --- scheduler -------------------------------------------------------------

class UnknownJobError(OpenPCError):
    pass


class AccessDeniedError(OpenPCError):
    pass


class TooManyNodesError(OpenPCError):
    pass


class IllegalTransitionError(OpenPCError):
    """A job-control action has no edge from the job's current state."""

    def __init__(self, from_state: str, action: str):
        super().__init__(f"cannot {action} a {from_state} job")
        self.from_state = from_state
        self.action = action


# --- command gateway -------------------------------------------------------

class EmptyCommandError(OpenPCError):
    pass


class ChannelDownError(OpenPCError):
    pass


class ChannelAuthError(OpenPCError):
    pass


class HardwareFaultError(OpenPCError):
    pass


class PathEscapeError(OpenPCError):
    pass


class WorkspaceError(OpenPCError):
    pass


# --- flood benchmark -------------------------------------------------------

class InvalidConfigError(OpenPCError):
    pass


class InsufficientNodesError(OpenPCError):
    pass


class RaggedSamplesError(OpenPCError):
    pass


class UnknownRunError(OpenPCError):
    pass


# --- persistence -----------------------------------------------------------

class StorageFailureError(OpenPCError):
    pass


class CorruptLogError(OpenPCError):
    """The event log has a sequence gap or an unreadable record."""

    def __init__(self, seq: int, reason: str = "sequence gap"):
        super().__init__(f"event {seq}: {reason}")
        self.seq = seq
        self.reason = reason
