class NumericalFailure(RuntimeError):
    """A numeric routine could not deliver a trustworthy value."""


class DegenerateRatioError(NumericalFailure):
    """``lambda * m_k`` reached 1 for some k >= 1, so the series ratio blows up."""
