"""Adaptive Simpson quadrature with tangent mapping of infinite ranges."""
import math

from ..errors import MaxDepthError, NonFiniteError

__all__ = ["integrate_adaptive"]


def _mapped(fn, a, b):
    """Return (g, u0, u1) with the integral of fn over [a, b] equal to that of g over [u0, u1]."""
    if math.isfinite(a) and math.isfinite(b):
        return fn, a, b

    def g(u):
        c = math.cos(u)
        if c == 0.0:
            return 0.0
        x = math.tan(u)
        return fn(x) / (c * c)

    u0 = -0.5 * math.pi if a == -math.inf else math.atan(a)
    u1 = 0.5 * math.pi if b == math.inf else math.atan(b)
    return g, u0, u1


def integrate_adaptive(fn, a, b, tol=1e-10, max_depth=50):
    """Integrate ``fn`` over ``[a, b]`` (either end may be infinite).

    Adaptive Simpson with Richardson correction: an interval is accepted when
    the two-panel and one-panel estimates differ by at most ``15 * tol_local``.
    Exact for cubic polynomials on finite intervals.
    """
    if not a < b:
        raise ValueError("need a < b")
    g, u0, u1 = _mapped(fn, a, b)

    def ev(u):
        y = float(g(u))
        if not math.isfinite(y):
            raise NonFiniteError(f"integrand is not finite at {u!r}")
        return y

    fa, fm, fb = ev(u0), ev(0.5 * (u0 + u1)), ev(u1)
    whole = (u1 - u0) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(u0, u1, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = ev(lm), ev(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        diff = left + right - est
        # minimum depth guards against accidental agreement on coarse panels
        if depth >= 4 and abs(diff) <= 15.0 * eps:
            total += left + right + diff / 15.0
            continue
        if depth >= max_depth:
            raise MaxDepthError(f"no convergence near [{lo!r}, {hi!r}]")
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return total
