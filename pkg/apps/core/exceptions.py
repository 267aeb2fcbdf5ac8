# apps/core/exceptions.py - errors surfaced by the command line


class ConfigError(Exception):
    """
    Invalid experiment document.

    ``errors`` maps field names to messages; ``line`` is set for syntax
    errors in the document itself.
    """

    def __init__(self, message, errors=None, line=None):
        super().__init__(message)
        self.errors = errors or {}
        self.line = line

    @classmethod
    def from_serializer_errors(cls, errors):
        flat = {}
        for field, messages in errors.items():
            if isinstance(messages, dict):
                messages = [f"{key}: {value}" for key, value in messages.items()]
            flat[field] = '; '.join(str(message) for message in messages)
        summary = ', '.join(f"{field}: {message}" for field, message in flat.items())
        return cls(f"Invalid configuration ({summary})", errors=flat)


class ReportFormatError(ValueError):
    """A report CSV or snapshot dump that does not follow the documented layout."""
