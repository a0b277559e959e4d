"""Canonical evaluation of smooth functions on tuples of Weil-algebra elements.

For jets a_i = b_i + c_i (real body plus nilpotent soul) the value of h is
the Taylor polynomial of h at the body point, with the souls substituted for
the displacement::

    h(a) = sum over multi-indices d, |d| <= k, of  (d-th partial of h)(b) / d!  *  c^d

Truncated multiplication makes every soul power of degree > k vanish, so the
sum is finite and exact in the algebra.
"""

from __future__ import annotations

from .expr import Expr, taylor_jet
from .jets import Jet, WeilTuple, factorial, jet_arith, multi_indices, split

__all__ = ["Jet", "WeilTuple", "eval_on_weil", "jet_arith", "split", "soul_monomials", "multi_indices", "factorial"]


def soul_monomials(souls, k: int) -> dict[tuple[int, ...], Jet]:
    """Products c_1^d_1 ... c_n^d_n for every multi-index of total degree <= k."""
    n = len(souls)
    m, order = souls[0].m, souls[0].k
    table = {(0,) * n: Jet.constant(1.0, m, order)}
    for d in multi_indices(n, k):
        if d in table:
            continue
        i = next(j for j, x in enumerate(d) if x)
        parent = d[:i] + (d[i] - 1,) + d[i + 1 :]
        table[d] = table[parent] * souls[i]
    return table


def eval_on_weil(h: Expr, a: WeilTuple | list[Jet] | tuple[Jet, ...]) -> Jet:
    """Evaluate ``h`` on the jets in ``a`` via its Taylor expansion at their bodies."""
    if not isinstance(a, WeilTuple):
        a = WeilTuple.of(a)
    bodies, souls = zip(*(split(x) for x in a))
    k = a.k
    coeffs = taylor_jet(h, bodies, k)
    monomials = soul_monomials(souls, k)
    result = Jet(a.m, k)
    for d, c in zip(coeffs.indices, coeffs.coeffs):
        if c != 0.0:
            result = result + monomials[d] * float(c)
    return result

