"""Exception types shared across the package."""


class SingularityError(ValueError):
    """A kernel was evaluated at a point where it diverges."""


class NonLipschitzError(ValueError):
    """A kernel has no finite Lipschitz constant on the requested domain."""


class DivergenceError(ValueError):
    """A tail integral of a kernel does not converge."""


class CFLError(ValueError):
    """The grid violates the stability condition dt <= dx."""

    def __init__(self, dt, dx):
        self.dt = dt
        self.dx = dx
        self.ratio = dt / dx
        super().__init__(
            f"CFL violation: dt={dt!r} > dx={dx!r} (lambda = dt/dx = {self.ratio:.6g} > 1)"
        )


class UnsupportedError(ValueError):
    """The requested operation is not defined for this model variant."""
