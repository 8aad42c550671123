"""Exception hierarchy shared by all modules."""


class ItkmLabError(Exception):
    pass


class InvalidInputError(ItkmLabError, ValueError):
    pass


class DegenerateFrameError(ItkmLabError):
    """The dictionary does not span the ambient space."""


class BudgetExceededError(ItkmLabError):
    """Exhaustive enumeration would exceed the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} evaluations, budget is {budget}")
        self.required = required
        self.budget = budget


class DomainError(ItkmLabError, ValueError):
    """A bound formula is evaluated outside its domain of definition."""


class NumericalError(ItkmLabError, ArithmeticError):
    pass
