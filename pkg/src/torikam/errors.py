"""Exception hierarchy.

Mathematical failures carry a short ``kind`` string that the command line
layer turns into a machine-readable error record.
"""


class TorikamError(Exception):
    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class SpecMismatch(ValueError):
    """Two series were combined although their truncations differ."""


class BadJet(TorikamError, ValueError):
    """A series has a v-independent part where none is allowed."""

    kind = "bad-jet"


class ResonantMode(TorikamError):
    """Every available divisor vanishes on a mode carrying a nonzero coefficient."""

    kind = "resonance"

    def __init__(self, message, modes=()):
        super().__init__(message)
        self.modes = list(modes)

    def to_dict(self):
        d = super().to_dict()
        d["modes"] = [[list(P), list(Q)] for P, Q in self.modes]
        return d


class Incompatible(TorikamError):
    """The right-hand sides violate L_i(F_j) = L_j(F_i)."""

    kind = "incompatible"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegreeOverflow(TorikamError):
    kind = "degree-overflow"


class Diverged(TorikamError):
    kind = "diverged"


class ScheduleError(ValueError):
    """Domain schedule parameters would let eps_k or r_k fall to half their start."""


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [{"field": "", "message": diagnostics}]
        self.diagnostics = list(diagnostics)
        msg = "; ".join(f"{d['field']}: {d['message']}" if d["field"] else d["message"]
                        for d in self.diagnostics)
        super().__init__(msg)
