"""Exception types raised across the package."""


class SymdetError(Exception):
    """Base class for all package-specific errors."""

    #: short machine-readable identifier used in CLI error JSON
    code = "error"


class ParseError(SymdetError):
    code = "parse"


class NonTriangleFace(ParseError):
    code = "non_triangle_face"


class DegenerateFace(SymdetError):
    code = "degenerate_face"


class ZeroArea(SymdetError):
    code = "zero_area"


class DisconnectedMesh(SymdetError):
    code = "disconnected"


class ConvergenceFailure(SymdetError):
    code = "convergence"


class LengthMismatch(SymdetError):
    code = "length_mismatch"


class ShapeMismatch(SymdetError):
    code = "shape_mismatch"


class IndexOutOfRange(SymdetError):
    code = "index_out_of_range"


class EmptyDataset(SymdetError):
    code = "empty_dataset"


class SingleClassDataset(SymdetError):
    code = "single_class_dataset"


class FormatError(SymdetError):
    code = "format"


class RepeatedEigenvalue(SymdetError):
    code = "repeated_eigenvalue"


class GenerationFailure(SymdetError):
    code = "generation_failure"


class DistortionExceeded(SymdetError):
    code = "distortion_exceeded"


class NoContactRegion(SymdetError):
    code = "no_contact_region"


class EmptyGroundTruth(SymdetError):
    code = "empty_ground_truth"


class EmptyInput(SymdetError):
    code = "empty_input"
