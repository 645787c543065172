"""Domain error types.

Every failure the library can signal is a subclass of :class:`BrainError`;
the class name doubles as the wire-level error code (the HTTP layer puts
``type(exc).__name__`` in the response body, the CLI prints it before the
message). Keep names stable.
"""


class BrainError(Exception):
    """Base class for all domain errors."""


# -- expression / XML ---------------------------------------------------

class MalformedExpr(BrainError):
    """Expression AST or expression XML violates the grammar."""


class XmlSyntax(BrainError):
    """Input is not well-formed XML, or not shaped like the expected document."""


class MissingAttribute(BrainError):
    def __init__(self, name, where=""):
        self.name = name
        suffix = f" on <{where}>" if where else ""
        super().__init__(f"missing required attribute '{name}'{suffix}")


class UnknownRuleKind(BrainError):
    pass


class InvalidRule(BrainError):
    """Rule field invariants violated when constructing a rule object."""


# -- repositories / registry --------------------------------------------

class DuplicateId(BrainError):
    pass


class NotFound(BrainError):
    pass


class DuplicateProvider(BrainError):
    pass


class NoProviderFound(BrainError):
    pass


# -- goal model ----------------------------------------------------------

class DanglingTaskRef(BrainError):
    pass


class DuplicateGoalId(BrainError):
    pass


class DuplicateTaskId(BrainError):
    pass


class CyclicGoal(BrainError):
    pass


class UnknownGoal(BrainError):
    pass


class EmptySelection(BrainError):
    pass


# -- composition ----------------------------------------------------------

class CyclicRules(BrainError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("ordering rules form a cycle: " + " -> ".join(self.cycle))


class ExclusiveConflict(BrainError):
    pass


class DanglingRuleRef(BrainError):
    pass


class MissingGuard(BrainError):
    pass


class UnknownAttachedTask(BrainError):
    pass


class BackwardReroute(BrainError):
    pass


class InvalidWorkflow(BrainError):
    """Workflow graph violates its structural invariants (shape, nesting, cycles)."""


class UnsupportedPattern(BrainError):
    pass


# -- BPEL documents -------------------------------------------------------

class UnresolvedTask(BrainError):
    pass


class FamilyMismatch(BrainError):
    pass


class UnboundLink(BrainError):
    pass


class SchemaViolation(BrainError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


# -- simulation ------------------------------------------------------------

class MissingMock(BrainError):
    def __init__(self, provider, operation):
        self.provider = provider
        self.operation = operation
        super().__init__(f"no mock for provider '{provider}' operation '{operation}'")


class TooLarge(BrainError):
    pass


class TraceSyntax(BrainError):
    """Trace text does not follow the line-oriented event format."""


# -- sessions ----------------------------------------------------------------

class StageViolation(BrainError):
    """Operation invoked out of design-stage order (HTTP 409)."""
