"""Bracketed root finding for increasing scalar functions."""
import math

from ..errors import BadBracketError, NoConvergenceError, NonFiniteError

__all__ = ["find_root_increasing"]


def find_root_increasing(fn, lo, hi, tol=1e-12, ftol=None, max_iter=500):
    """Root of a continuous, strictly increasing ``fn`` on ``[lo, hi]``.

    Safeguarded secant steps inside a shrinking bisection bracket. Stops when
    ``|fn(x)| <= ftol`` (defaults to ``tol``) or the bracket is narrower than
    ``tol * (1 + |x|)``.
    """
    if ftol is None:
        ftol = tol
    flo = fn(lo)
    fhi = fn(hi)
    if not (math.isfinite(flo) and math.isfinite(fhi)):
        raise NonFiniteError("function is not finite at the bracket ends")
    if not (flo < 0.0 < fhi):
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        raise BadBracketError(f"need fn(lo) < 0 < fn(hi), got {flo:.6g}, {fhi:.6g}")

    x = lo
    for it in range(max_iter):
        width = hi - lo
        mid = lo + 0.5 * width
        # secant candidate, kept well inside the bracket; every third step bisects
        x = lo - flo * width / (fhi - flo)
        if it % 3 == 2 or not (lo + 0.01 * width < x < hi - 0.01 * width):
            x = mid
        fx = fn(x)
        if not math.isfinite(fx):
            raise NonFiniteError(f"function is not finite at x={x!r}")
        if abs(fx) <= ftol:
            return x
        if fx < 0.0:
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if hi - lo <= tol * (1.0 + abs(x)):
            return lo - flo * (hi - lo) / (fhi - flo)
    raise NoConvergenceError("root finder exceeded its iteration cap")
