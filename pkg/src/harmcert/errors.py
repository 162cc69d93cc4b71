"""Exception types shared across the package."""


class HarmcertError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(HarmcertError):
    """Malformed configuration; the message names the offending field."""


class AdmissibilityError(HarmcertError):
    """Noise level too high for reliable rank detection; refused by default."""


class InversionError(HarmcertError):
    """Failure inside the inversion pipeline, labelled with the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
