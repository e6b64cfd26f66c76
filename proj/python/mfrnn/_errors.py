class MfrnnError(RuntimeError):
    """Raised for every failure reported by the native core.

    ``code`` is the error name (``"NegativeVariance"``, ``"NoConvergence"``, ...).
    """

    def __init__(self, code, message):
        super().__init__(code, message)
        self.code = code
        self.message = message

    def __str__(self):
        return f"{self.code}: {self.message}"
