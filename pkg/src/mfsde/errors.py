"""Exception types shared across the package."""


class EvaluationError(ValueError):
    """A coefficient, weight or measure evaluation produced an invalid value."""


class ConfigError(ValueError):
    """A configuration file or parameter set is malformed or inconsistent."""


class SimulationBlowup(RuntimeError):
    """A particle state became non-finite during integration.

    Carries the first offending (particle, step) pair.
    """

    def __init__(self, particle, step, value=None):
        self.particle = int(particle)
        self.step = int(step)
        self.value = value
        msg = f"non-finite state at particle {particle}, step {step}"
        if value is not None:
            msg += f" (value {value!r})"
        super().__init__(msg)
