"""Exception types shared across the package."""


class GraspGymError(Exception):
    """Base class for package errors."""


class ConfigurationError(GraspGymError):
    """Invalid or incompatible configuration (bad mode/face combination, bad ranges)."""


class ProtocolError(GraspGymError):
    """An operation was called outside its allowed episode/training phase."""


class ContractError(GraspGymError):
    """An input violated a shape or value contract."""


class DataFormatError(GraspGymError):
    """A serialized file is malformed (bad magic, version, truncation)."""


class NonFiniteError(GraspGymError):
    """A gradient, target, or score contained NaN/Inf."""
