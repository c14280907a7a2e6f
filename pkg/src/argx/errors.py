"""Exception hierarchy shared across the engine.

CLI exit-code mapping relies on every engine failure deriving from
ArgxError (exit 1); anything else is a usage bug (exit 2 via argparse).
"""


class ArgxError(Exception):
    """Base class for all engine errors."""


class GraphError(ArgxError):
    """Malformed or invalid argumentation graph."""


class UnknownArgument(GraphError):
    """Referenced argument id is not part of the graph."""


class SemanticsError(ArgxError):
    """Bad input to a gradual-semantics computation."""


class ProtocolError(ArgxError):
    """Violation of the exchange protocol rules."""


class OutOfTurn(ProtocolError):
    pass


class UntruthfulEdge(ProtocolError):
    pass


class DuplicateEdge(ProtocolError):
    pass


class InvalidContribution(ProtocolError):
    pass


class NoConflict(ProtocolError):
    pass


class ExchangeOver(ProtocolError):
    pass


class MissingBias(ProtocolError):
    pass


class BiasOutOfRange(ProtocolError):
    pass


class StateUndefined(ProtocolError):
    """Arguing-for/against is only defined while two stances differ."""


class ReplayMismatch(ArgxError):
    """Transcript re-execution diverged from the recorded run."""
