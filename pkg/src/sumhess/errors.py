"""Exception types shared across the package."""


class SumhessError(Exception):
    """Base class for package errors."""


class ConfigError(SumhessError):
    """Invalid configuration, parameter range, or input file."""


class CollarError(SumhessError):
    """Point lies outside the boundary collar where distance quantities are valid."""


class AdmissibilityError(SumhessError):
    """A state left the admissibility cone at some node."""

    def __init__(self, message, node=None, margin=None):
        super().__init__(message)
        self.node = node
        self.margin = margin


class NonconvergenceError(SumhessError):
    """Newton iteration failed; carries the last iterate."""

    def __init__(self, message, last_values=None, residual_norm=None):
        super().__init__(message)
        self.last_values = last_values
        self.residual_norm = residual_norm


class ContinuationError(SumhessError):
    """Path following stalled; carries the last good state."""

    def __init__(self, message, last_t=None, last_values=None):
        super().__init__(message)
        self.last_t = last_t
        self.last_values = last_values


class SamplerStarvationError(SumhessError):
    """Rejection sampler acceptance rate fell below the floor."""

    def __init__(self, message, acceptance_rate=None, proposals=None):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate
        self.proposals = proposals
