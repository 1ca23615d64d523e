"""Admissibility regions and exponent relations.

Every predicate here is a pure function of its arguments. Equality branches
are tested with an absolute tolerance on the difference (1e-12 unless the
caller passes another value); infinite exponents are ``math.inf`` so that
``n / p`` is exactly 0 for ``p = inf``.
"""

import math
from typing import Dict, List, Optional

from herzkit.exceptions import InvalidParameterError, MissingParameterError
from herzkit.models.params import (
    Condition,
    HypothesisReport,
    TheoremId,
    TheoremParams,
    reciprocal,
)


DEFAULT_TOL = 1e-12


def in_V(alpha: float, p: float, q: float, n: int, tol: float = DEFAULT_TOL) -> bool:
    """Whether (alpha, p, q) belongs to the set V on which Herz functions are L^1_loc.

    True iff alpha < n - n/p, or alpha = n - n/p with q = 1, or alpha = 0
    with p = q = inf. Values within ``tol`` of n - n/p are equality cases.
    """
    bound = n - n * reciprocal(p)
    if alpha < bound - tol:
        return True
    if abs(alpha - bound) <= tol and q == 1.0:
        return True
    return abs(alpha) <= tol and math.isinf(p) and math.isinf(q)


def maximal_admissible(alpha: float, p: float, n: int) -> bool:
    """Whether the maximal operator is bounded on the Herz space: 1 < p < inf, -n/p < alpha < n(1 - 1/p)."""
    if not (1.0 < p < math.inf):
        return False
    return -n / p < alpha < n * (1.0 - 1.0 / p)


def riesz_admissible(alpha: float, p: float, lam: float, n: int) -> bool:
    """Whether lambda - n/p < alpha < n - n/p, the Riesz-potential region.

    Raises:
        InvalidParameterError: If lambda is outside (0, n) or p outside (1, n/lambda)
    """
    if not 0.0 < lam < n:
        raise InvalidParameterError("lambda", f"must satisfy 0 < lambda < n = {n}, got {lam}")
    if not 1.0 < p < n / lam:
        raise InvalidParameterError("p", f"must satisfy 1 < p < n/lambda = {n / lam:.12g}, got {p}")
    return lam - n / p < alpha < n - n / p


def sobolev_exponent(p: float, lam: float, n: int) -> float:
    """Return p* with 1/p* = 1/p - lambda/n.

    Raises:
        InvalidParameterError: If lambda <= 0 or 1/p - lambda/n <= 0
    """
    if not lam > 0.0:
        raise InvalidParameterError("lambda", f"must be positive, got {lam}")
    if math.isinf(p) or n - lam * p <= 0.0:
        raise InvalidParameterError("p", f"1/p - lambda/n must be positive (p={p}, lambda={lam}, n={n})")
    return n * p / (n - lam * p)


def _slack(lhs: float, relation: str, rhs: float, tol: float) -> float:
    if relation == "=":
        if math.isinf(lhs) or math.isinf(rhs):
            return tol if lhs == rhs else -math.inf
        return tol - abs(lhs - rhs)
    if math.isinf(lhs) and lhs == rhs:
        return 0.0
    if relation in ("<", "<="):
        return rhs - lhs
    return lhs - rhs


class _Checker:
    """Collects the conditions of one theorem."""

    def __init__(self, thm: TheoremId, params: TheoremParams, tol: float):
        self.thm = thm
        self.params = params
        self.tol = tol
        self.conditions: List[Condition] = []
        self.derived: Dict[str, float] = {}

    def need(self, symbol: str):
        value = getattr(self.params, symbol)
        if value is None:
            raise MissingParameterError(symbol, self.thm.value)
        return value

    def check(self, name: str, lhs: float, relation: str, rhs: float) -> None:
        slack = _slack(lhs, relation, rhs, self.tol)
        if relation in ("<", ">"):
            holds = slack > 0.0
        else:
            holds = slack >= 0.0
        self.conditions.append(
            Condition(name=name, lhs=lhs, relation=relation, rhs=rhs, slack=slack, holds=holds)
        )

    def membership(self, name: str, holds: bool, lhs: float, rhs: float) -> None:
        gap = abs(rhs - lhs)
        slack = gap if holds else -max(gap, self.tol)
        self.conditions.append(
            Condition(name=name, lhs=lhs, relation="in", rhs=rhs, slack=slack, holds=holds)
        )

    def report(self) -> HypothesisReport:
        violated = [c for c in self.conditions if not c.holds]
        return HypothesisReport(
            theorem=self.thm,
            ok=not violated,
            violated=violated,
            conditions=list(self.conditions),
            derived=dict(self.derived),
        )


def _check_v(c: _Checker, alpha: float, p: float, n: int) -> None:
    r: Optional[float] = c.params.r
    bound = n - n * reciprocal(p)
    if r is None:
        # Without r only the strict branch is decidable
        c.check("(alpha2,p,r) in V [strict branch]", alpha, "<", bound)
    else:
        c.membership("(alpha2,p,r) in V", in_V(alpha, p, r, n, c.tol), alpha, bound)


def _sobolev_common(c: _Checker) -> tuple:
    n, p, m = c.need("n"), c.need("p"), c.need("m")
    a1, a2 = c.need("alpha1"), c.need("alpha2")
    return n, p, m, a1, a2


def _l1loc(c: _Checker) -> None:
    n, alpha, p, q = c.need("n"), c.need("alpha"), c.need("p"), c.need("q")
    c.membership("(alpha,p,q) in V", in_V(alpha, p, q, n, c.tol), alpha, n - n * reciprocal(p))


def _maximal(c: _Checker) -> None:
    n, alpha, p = c.need("n"), c.need("alpha"), c.need("p")
    c.check("p>1", p, ">", 1.0)
    c.check("p<inf", p, "<", math.inf)
    c.check("alpha>-n/p", alpha, ">", -n * reciprocal(p))
    c.check("alpha<n(1-1/p)", alpha, "<", n * (1.0 - reciprocal(p)))


def _result3(c: _Checker) -> None:
    n, alpha, p, lam = c.need("n"), c.need("alpha"), c.need("p"), c.need("lam")
    q0, q1 = c.need("q0"), c.need("q1")
    c.check("lambda>0", lam, ">", 0.0)
    c.check("lambda<n", lam, "<", float(n))
    c.check("p>1", p, ">", 1.0)
    c.check("p<n/lambda", p, "<", n / lam if lam > 0 else math.inf)
    c.check("alpha>lambda-n/p", alpha, ">", lam - n * reciprocal(p))
    c.check("alpha<n-n/p", alpha, "<", n - n * reciprocal(p))
    c.check("q0<=q1", q0, "<=", q1)
    if lam > 0 and not math.isinf(p) and n - lam * p > 0:
        c.derived["p_star"] = sobolev_exponent(p, lam, n)


def _embeddings1(c: _Checker) -> None:
    n, q, a1, a2 = c.need("n"), c.need("q"), c.need("alpha1"), c.need("alpha2")
    c.check("q>=1", q, ">=", 1.0)
    c.check("q<=n/(n-1)", q, "<=", n / (n - 1) if n > 1 else math.inf)
    c.check("alpha2+n-1=alpha1+n/q", a2 + n - 1, "=", a1 + n * reciprocal(q))


def _embeddings2(c: _Checker) -> None:
    n, p, q = c.need("n"), c.need("p"), c.need("q")
    a1, a2 = c.need("alpha1"), c.need("alpha2")
    c.check("p<n (implied by exponent bound)", p, "<", float(n))
    c.check("q>=1", q, ">=", 1.0)
    denominator = n * reciprocal(p) - 1.0
    if denominator > 0:
        c.check("q<=n/(n/p-1)", q, "<=", n / denominator)
    c.check("alpha2>=alpha1", a2, ">=", a1)
    c.check("n/q-n/p=alpha2-1-alpha1", n * reciprocal(q) - n * reciprocal(p), "=", a2 - 1 - a1)
    c.check("alpha2-1-alpha1<=0", a2 - 1 - a1, "<=", 0.0)


def _ckn(c: _Checker, gradient_exponent: Optional[float]) -> None:
    n, q, u = c.need("n"), c.need("q"), c.need("u")
    r, s, v = c.need("r"), c.need("s"), c.need("v")
    a1, a2, a3 = c.need("alpha1"), c.need("alpha2"), c.need("alpha3")
    sigma, theta = c.need("sigma"), c.need("theta")
    # Embeddings3 is the gradient exponent 1 case of Embeddings4
    p = gradient_exponent if gradient_exponent is not None else c.need("p")
    np_ = n * reciprocal(p)
    label = "n" if gradient_exponent is not None else "n/p"
    c.check("u>=1", u, ">=", 1.0)
    c.check(f"{label}+alpha2>0", np_ + a2, ">", 0.0)
    c.check("n/u+alpha3>0", n * reciprocal(u) + a3, ">", 0.0)
    c.check("n/q+alpha1>0", n * reciprocal(q) + a1, ">", 0.0)
    c.check("sigma<=alpha2", sigma, "<=", a2)
    c.check("alpha2<=sigma+1", a2, "<=", sigma + 1.0)
    c.check("alpha1=theta*sigma+(1-theta)*alpha3", a1, "=", theta * sigma + (1 - theta) * a3)
    c.check(
        f"n/q+alpha1=theta({label}+alpha2-1)+(1-theta)(n/u+alpha3)",
        n * reciprocal(q) + a1,
        "=",
        theta * (np_ + a2 - 1.0) + (1.0 - theta) * (n * reciprocal(u) + a3),
    )
    c.check("1/r=theta/s+(1-theta)/v", reciprocal(r), "=",
            theta * reciprocal(s) + (1.0 - theta) * reciprocal(v))


def _ckn_classical(c: _Checker) -> None:
    # alpha1 plays gamma, alpha2 the classical alpha; p is the gradient exponent
    n, p, q = c.need("n"), c.need("p"), c.need("q")
    gamma, alpha = c.need("alpha1"), c.need("alpha2")
    c.check("p<inf", p, "<", math.inf)
    c.check("alpha2>1-n/p", alpha, ">", 1.0 - n * reciprocal(p))
    c.check("alpha2-1<=alpha1", alpha - 1.0, "<=", gamma)
    c.check("alpha1<=alpha2", gamma, "<=", alpha)
    c.check("n/q-n/p=alpha2-alpha1-1", n * reciprocal(q) - n * reciprocal(p), "=", alpha - gamma - 1.0)
    c.check("alpha2-alpha1-1<=0", alpha - gamma - 1.0, "<=", 0.0)


def _embeddings_first(c: _Checker) -> None:
    n, p, m, a1, a2 = _sobolev_common(c)
    c.check("p>1", p, ">", 1.0)
    c.check("p<inf", p, "<", math.inf)
    _check_v(c, a2, p, n)
    c.check("alpha2>=alpha1", a2, ">=", a1)
    c.check("alpha2>m-n/p", a2, ">", m - n * reciprocal(p))
    c.check("alpha2<n-n/p", a2, "<", n - n * reciprocal(p))
    c.check("m-alpha2+alpha1>0", m - a2 + a1, ">", 0.0)
    n_over_q = n * reciprocal(p) - m + a2 - a1
    c.check("n/q=n/p-m+alpha2-alpha1>0", n_over_q, ">", 0.0)
    if n_over_q > 0:
        c.derived["q"] = n / n_over_q
    if c.params.q is not None:
        c.check("n/q=n/p-m+alpha2-alpha1", n * reciprocal(c.params.q), "=", n_over_q)


def _max_bound(n: int, p: float, a1: float, a2: float) -> float:
    np_ = n * reciprocal(p)
    return max(np_ + a2, np_ + a2 - a1)


def _embed_q_eq_p(c: _Checker) -> None:
    n, p, m, a1, a2 = _sobolev_common(c)
    c.check("p>1", p, ">", 1.0)
    c.check("p<inf", p, "<", math.inf)
    _check_v(c, a2, p, n)
    c.check("alpha2>=alpha1", a2, ">=", a1)
    c.check("alpha1+n/p>0", a1 + n * reciprocal(p), ">", 0.0)
    c.check("m>max(n/p+alpha2,n/p+alpha2-alpha1)", float(m), ">", _max_bound(n, p, a1, a2))
    c.check("m<n", float(m), "<", float(n))


def _embed_q_infty(c: _Checker) -> None:
    n, p, m, a1, a2 = _sobolev_common(c)
    c.check("p>1", p, ">", 1.0)
    c.check("p<inf", p, "<", math.inf)
    _check_v(c, a2, p, n)
    c.check("m>n/p+alpha2", float(m), ">", n * reciprocal(p) + a2)
    c.check("m<n", float(m), "<", float(n))
    c.check("alpha2>=alpha1", a2, ">=", a1)
    c.check("alpha1>-n/p", a1, ">", -n * reciprocal(p))


def _embed_p_lt_q(c: _Checker) -> None:
    n, p, m, a1, a2 = _sobolev_common(c)
    q = c.need("q")
    c.check("p>1", p, ">", 1.0)
    c.check("q>p", q, ">", p)
    c.check("q<inf", q, "<", math.inf)
    c.check("alpha2>=alpha1", a2, ">=", a1)
    c.check("alpha1>-n/p", a1, ">", -n * reciprocal(p))
    c.check("m>max(n/p+alpha2,n/p+alpha2-alpha1)", float(m), ">", _max_bound(n, p, a1, a2))
    c.check("m<n", float(m), "<", float(n))
    _check_v(c, a2, p, n)


def _embed_q_lt_p(c: _Checker) -> None:
    n, p, m, a1, a2 = _sobolev_common(c)
    q = c.need("q")
    c.check("q>1", q, ">", 1.0)
    c.check("p>q", p, ">", q)
    c.check("p<inf", p, "<", math.inf)
    c.check("alpha2+n/p>=alpha1+n/q", a2 + n * reciprocal(p), ">=", a1 + n * reciprocal(q))
    c.check("m>max(n/p+alpha2,n/p+alpha2-alpha1)", float(m), ">", _max_bound(n, p, a1, a2))
    c.check("m<n", float(m), "<", float(n))
    _check_v(c, a2, p, n)


_PREDICATES = {
    TheoremId.L1LOC: _l1loc,
    TheoremId.MAXIMAL_INQ: _maximal,
    TheoremId.RESULT3: _result3,
    TheoremId.EMBEDDINGS1: _embeddings1,
    TheoremId.EMBEDDINGS2: _embeddings2,
    TheoremId.EMBEDDINGS3: lambda c: _ckn(c, 1.0),
    TheoremId.EMBEDDINGS4: lambda c: _ckn(c, None),
    TheoremId.CKN_CLASSICAL: _ckn_classical,
    TheoremId.EMBEDDINGS_FIRST: _embeddings_first,
    TheoremId.EMBED_Q_EQ_P: _embed_q_eq_p,
    TheoremId.EMBED_Q_INFTY: _embed_q_infty,
    TheoremId.EMBED_P_LT_Q: _embed_p_lt_q,
    TheoremId.EMBED_Q_LT_P: _embed_q_lt_p,
}


def check_hypotheses(thm: TheoremId, params: TheoremParams, tol: float = DEFAULT_TOL) -> HypothesisReport:
    """Evaluate every hypothesis of a theorem on a parameter bundle.

    Args:
        thm: Theorem whose hypotheses are checked
        params: Parameter bundle
        tol: Absolute tolerance of equality conditions

    Returns:
        HypothesisReport listing every condition with its slack

    Raises:
        MissingParameterError: If the bundle lacks a symbol the theorem references
    """
    checker = _Checker(TheoremId(thm), params, tol)
    _PREDICATES[checker.thm](checker)
    return checker.report()
