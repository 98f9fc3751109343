class KitError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class ArgumentError(KitError, ValueError):
    pass


class DimensionError(KitError, ValueError):
    pass


class EmptySelectionError(KitError, ValueError):
    pass


class PlacementError(KitError):
    pass


class AssetError(KitError, OSError):
    pass


class RestorerError(KitError):
    pass


class NoBoundaryError(RestorerError):
    pass


class ManifestError(KitError):
    pass


class InvariantViolation(KitError):
    pass


class ConfigError(KitError):
    pass
