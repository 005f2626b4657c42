"""Cantor dissections of the digit-constrained sets ``E(alpha, s)`` and ``F(alpha, s)``.

Both sets forbid ``s + 1`` consecutive zero digits. ``F`` also forbids the
block ``a_i-1, a_{i+1}-2, ..., a_{i+s}-2``; ``E`` forbids
``a_i-2, ..., a_{i+s-1}-2, a_{i+s}-1`` but keeps tails
``a_i-1, a_{i+1}-2, a_{i+2}-2, ...`` (it is closed).

Membership is a safety automaton over eventually periodic ``alpha``. A
node of the dissection is a digit prefix, and for ``E`` also a side:
``A`` keeps the tails lexicographically at most ``(a-2, a-2, ...)``, ``B``
those at least that. Hull endpoints are the lexicographically extreme
live words. These are eventually periodic, so their values are exact surds.
"""

from __future__ import annotations

import sys

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .expansions import DigitWord, word_tail_value
from .ncf import NcfExpansion, structural_bounds
from .numerics import NumericsError, Surd

__all__ = [
    "SBelowN",
    "EmptyNode",
    "TargetOutsideWindow",
    "DigitAutomaton",
    "DissectionNode",
    "Dissection",
    "HallReport",
    "ProductWindow",
    "membership_E",
    "membership_F",
    "dissect",
    "endpoints",
    "hall_condition_check",
    "find_s0",
    "product_window",
    "product_contains_interval_witness",
]


class SBelowN(NumericsError):
    pass


class EmptyNode(NumericsError):
    pass


class TargetOutsideWindow(NumericsError):
    pass


FREE, EQ_A, EQ_B = 0, 1, 2
_REL_TOL = 1e-11


class DigitAutomaton:
    """Prefix automaton for ``E`` (``kind="E"``) or ``F`` (``kind="F"``).

    States are interned to integers. A state records the canonical index of
    the next digit, the trailing zero count, the open ``a-1, a-2, ...`` run
    (its length for ``F``), the trailing ``a-2`` run (``E`` only) and the
    side flag for ``A``/``B`` nodes.
    """

    def __init__(self, alpha: NcfExpansion, s: int, kind: str):
        if kind not in ("E", "F"):
            raise ValueError("kind must be 'E' or 'F'")
        if not alpha.is_periodic:
            raise NumericsError("dissections need an eventually periodic alpha")
        self.alpha = alpha
        self.s = s
        self.kind = kind
        self._states: list[tuple] = []
        self._index: dict[tuple, int] = {}
        self._trans: list[Optional[list]] = []
        self._live: Optional[set] = None
        self._vcache: dict = {}
        self._wcache: dict = {}
        self.start = self._intern((alpha.phase(1), 0, -1, 0, FREE))

    # -- transitions -----------------------------------------------------------
    def _intern(self, st: tuple) -> int:
        i = self._index.get(st)
        if i is None:
            i = len(self._states)
            self._states.append(st)
            self._index[st] = i
            self._trans.append(None)
            self._live = None
        return i

    def _raw_step(self, st: tuple, d: int):
        pos, z, o, g, flag = st
        a = self.alpha.digit(pos)
        if not 0 <= d <= a - 1:
            return None
        s = self.s
        z2 = z + 1 if d == 0 else 0
        if z2 > s:
            return None
        am1, am2 = d == a - 1, d == a - 2
        if am1 and o >= 0:
            return None  # a_i-1, a-2, ..., a_j-1 is never a Davenport block
        if self.kind == "F":
            if am1:
                o2 = 0
            elif am2 and o >= 0:
                o2 = o + 1
                if o2 >= s:
                    return None
            else:
                o2 = -1
            g2 = 0
        else:
            if am1 and g >= s:
                return None
            o2 = 0 if am1 else (o if am2 else -1)
            g2 = min(g + 1, s) if am2 else 0
        if flag != FREE:
            if d < a - 2:
                if flag == EQ_B:
                    return None
                flag = FREE
            elif d > a - 2:
                if flag == EQ_A:
                    return None
                flag = FREE
        return (self.alpha.phase(pos + 1), z2, o2, g2, flag)

    def transitions(self, i: int) -> list:
        """``[(digit, state)]`` for every admissible next digit."""
        t = self._trans[i]
        if t is None:
            st = self._states[i]
            t = []
            for d in range(self.alpha.digit(st[0])):
                nxt = self._raw_step(st, d)
                if nxt is not None:
                    t.append((d, self._intern(nxt)))
            self._trans[i] = t
        return t

    def step(self, i: Optional[int], d: int) -> Optional[int]:
        if i is None:
            return None
        for dd, j in self.transitions(i):
            if dd == d:
                return j
        return None

    def with_flag(self, i: int, flag: int) -> int:
        st = self._states[i]
        return self._intern(st[:4] + (flag,))

    def position(self, i: int) -> int:
        """Number of digits already read, in canonical form."""
        return self._states[i][0] - 1

    # -- liveness ------------------------------------------------------------
    def _explore(self):
        seen = set()
        stack = list(range(len(self._states)))
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            for _, j in self.transitions(i):
                if j not in seen:
                    stack.append(j)
        return seen

    def live(self, i: Optional[int]) -> bool:
        if i is None:
            return False
        if self._live is None or i >= len(self._trans) or self._trans[i] is None:
            self._compute_live()
        return i in self._live

    def _compute_live(self):
        # all flag variants of known states are included so liveness is total
        for st in list(self._states):
            for flag in (FREE, EQ_A, EQ_B):
                self._intern(st[:4] + (flag,))
        states = self._explore()
        live = set(states)
        changed = True
        while changed:
            changed = False
            for i in list(live):
                if not any(j in live for _, j in self.transitions(i)):
                    live.discard(i)
                    changed = True
        self._live = live

    # -- extreme words ---------------------------------------------------------
    def extreme_path(self, i: int, upper: bool) -> tuple[list[int], list[int]]:
        """Greedy lexicographic extreme continuation: ``(pre, cycle)`` digits."""
        key = (i, upper)
        if key in self._wcache:
            return self._wcache[key]
        if not self.live(i):
            raise EmptyNode("no infinite continuation")
        order: dict[int, int] = {}
        digits: list[int] = []
        cur = i
        while cur not in order:
            order[cur] = len(digits)
            opts = [(d, j) for d, j in self.transitions(cur) if self.live(j)]
            d, j = max(opts) if upper else min(opts)
            digits.append(d)
            cur = j
        m = order[cur]
        out = (digits[:m], digits[m:])
        self._wcache[key] = out
        return out

    def extreme_value(self, i: int, upper: bool):
        """Exact ``sum_{j>=1} b_{n+j} D_{n+j} / D_n`` of the extreme continuation."""
        key = (i, upper)
        v = self._vcache.get(key)
        if v is None:
            pre, cyc = self.extreme_path(i, upper)
            n = self.position(i)
            word = DigitWord(tuple([0] * n + pre), tuple(cyc))
            v = word_tail_value(self.alpha, word, n)
            self._vcache[key] = (v, float(v))
            v = self._vcache[key]
        return v

    def run(self, digits: Sequence[int], start: Optional[int] = None) -> Optional[int]:
        cur = self.start if start is None else start
        for d in digits:
            cur = self.step(cur, d)
            if cur is None:
                return None
        return cur


def _scan(digits: Sequence[int], alpha: NcfExpansion, s: int, kind: str) -> bool:
    aut = DigitAutomaton(alpha, s, kind)
    return aut.run(digits) is not None


def membership_F(digits, alpha: NcfExpansion, s: int, scan_depth: int = 100) -> bool:
    """No ``s+1`` zeros and no ``a_i-1, a-2, ..., a_{i+s}-2`` within ``scan_depth``."""
    return _scan(_digits_of(digits, scan_depth), alpha, s, "F")


def membership_E(digits, alpha: NcfExpansion, s: int, scan_depth: int = 100) -> bool:
    """No ``s+1`` zeros and no ``a-2, ..., a-2, a_{i+s}-1`` within ``scan_depth``."""
    return _scan(_digits_of(digits, scan_depth), alpha, s, "E")


def _digits_of(digits, n: int) -> list[int]:
    if isinstance(digits, DigitWord):
        return digits.digits(n)
    if hasattr(digits, "digits"):
        return digits.digits(n)
    return list(digits)[:n]


# -- nodes -------------------------------------------------------------------

@dataclass
class DissectionNode:
    kind: str  # "C", "A" or "B"
    prefix: tuple
    s: int
    empty: bool
    lower_word: Optional[DigitWord] = None
    upper_word: Optional[DigitWord] = None
    children: list = field(default_factory=list)
    _dis: Optional["Dissection"] = field(default=None, repr=False)

    @property
    def level(self) -> int:
        return len(self.prefix)

    @property
    def S(self):
        return self._dis.partial_sum(self.prefix)

    def endpoints(self):
        return endpoints(self)

    def to_json(self, digits: int = 20) -> dict:
        out = {"kind": self.kind, "prefix": list(self.prefix), "empty": self.empty}
        if not self.empty:
            lo, hi = self.endpoints()
            out["lower"] = _dec(lo, digits)
            out["upper"] = _dec(hi, digits)
            out["lowerWord"] = self.lower_word.to_json()
            out["upperWord"] = self.upper_word.to_json()
        if self.children:
            out["children"] = [c.to_json(digits) for c in self.children]
        return out


def _dec(v, digits):
    if isinstance(v, Fraction):
        v = Surd.coerce(v)
    return v.decimal(digits)


class Dissection:
    """Level-by-level dissection of ``E`` or ``F``; levels are generated lazily."""

    def __init__(self, kind: str, alpha: NcfExpansion, s: int):
        kind = kind.upper()
        if kind not in ("E", "F"):
            raise ValueError("kind must be 'E' or 'F'")
        N = structural_bounds(expansion=alpha).N
        if s < N:
            raise SBelowN(f"s = {s} is below N = {N}")
        self.kind = kind
        self.alpha = alpha
        self.s = s
        self.aut = DigitAutomaton(alpha, s, kind)
        self._Df: list[float] = []
        self._Sexact: dict = {(): Fraction(0)}

    def Df(self, k: int) -> float:
        while len(self._Df) <= k:
            self._Df.append(float(self.alpha.D(len(self._Df))))
        return self._Df[k]

    def partial_sum(self, prefix: Sequence[int]):
        prefix = tuple(prefix)
        v = self._Sexact.get(prefix)
        if v is None:
            v = self.partial_sum(prefix[:-1]) + prefix[-1] * self.alpha.D(len(prefix))
            if len(prefix) <= 6:
                self._Sexact[prefix] = v
        return v

    # raw level records: (kind, prefix, S_float, free_state, flagged_state)
    def roots(self) -> list[tuple]:
        st = self.aut.start
        if self.kind == "F":
            return [("C", (), 0.0, st, st)]
        return [("A", (), 0.0, st, self.aut.with_flag(st, EQ_A)),
                ("B", (), 0.0, st, self.aut.with_flag(st, EQ_B))]

    def children(self, rec: tuple) -> list[tuple]:
        kind, prefix, S, free, _ = rec
        n = len(prefix)
        a = self.alpha.digit(n + 1)
        D = self.Df(n + 1)
        out = []
        if kind == "C":
            plan = [("C", c) for c in range(a)]
        elif kind == "A":
            plan = []
            for c in range(a - 1):
                plan.append(("A", c))
                if c <= a - 3:
                    plan.append(("B", c))
        else:
            plan = [("B", a - 2), ("A", a - 1)]
        for k, c in plan:
            nxt = self.aut.step(free, c)
            if nxt is None:
                continue
            flagged = nxt if k == "C" else self.aut.with_flag(nxt, EQ_A if k == "A" else EQ_B)
            if not self.aut.live(flagged):
                continue
            out.append((k, prefix + (c,), S + c * D, nxt, flagged))
        return out

    def levels(self, depth: int) -> Iterator[list[list[tuple]]]:
        """Levels ``0..depth`` as lists of sibling groups (one group per parent)."""
        groups = [[r for r in self.roots() if self.aut.live(r[4])]]
        yield groups
        for _ in range(depth):
            groups = [self.children(r) for g in groups for r in g]
            groups = [g for g in groups if g]
            yield groups

    def bounds_float(self, rec: tuple) -> tuple[float, float]:
        _, prefix, S, _, flagged = rec
        Dn = self.Df(len(prefix))
        lo = S + Dn * self.aut.extreme_value(flagged, False)[1]
        hi = S + Dn * self.aut.extreme_value(flagged, True)[1]
        return lo, hi

    def bounds_exact(self, rec: tuple):
        _, prefix, _, _, flagged = rec
        S = self.partial_sum(prefix)
        Dn = self.alpha.D(len(prefix))
        lo = S + Dn * self.aut.extreme_value(flagged, False)[0]
        hi = S + Dn * self.aut.extreme_value(flagged, True)[0]
        return lo, hi

    def node(self, rec: tuple) -> DissectionNode:
        kind, prefix, _, _, flagged = rec
        empty = not self.aut.live(flagged)
        node = DissectionNode(kind, prefix, self.s, empty, _dis=self)
        node._rec = rec
        if not empty:
            n = len(prefix)
            for upper in (False, True):
                pre, cyc = self.aut.extreme_path(flagged, upper)
                w = DigitWord(tuple(prefix) + tuple(pre), tuple(cyc))
                if upper:
                    node.upper_word = w
                else:
                    node.lower_word = w
        return node

    def node_for(self, kind: str, prefix: Sequence[int]) -> DissectionNode:
        """Node for an explicit prefix (possibly empty)."""
        prefix = tuple(prefix)
        free = self.aut.run(prefix)
        if free is None:
            return DissectionNode(kind, prefix, self.s, True, _dis=self)
        if kind == "C":
            flagged = free
        else:
            flagged = self.aut.with_flag(free, EQ_A if kind == "A" else EQ_B)
        S = sum(c * self.Df(k) for k, c in enumerate(prefix, start=1))
        return self.node((kind, prefix, S, free, flagged))

    def tree(self, depth: int) -> list[DissectionNode]:
        """Materialized tree (keep ``depth`` small)."""
        def build(rec, left):
            nd = self.node(rec)
            if left:
                nd.children = [build(c, left - 1) for c in self.children(rec)]
            return nd
        return [build(r, depth) for r in self.roots() if self.aut.live(r[4])]


def dissect(kind: str, alpha: NcfExpansion, s: int, depth: int) -> list[DissectionNode]:
    """Dissection tree of ``E`` (roots ``A()``, ``B()``) or ``F`` (root ``C()``)."""
    return Dissection(kind, alpha, s).tree(depth)


def endpoints(node: DissectionNode):
    """Exact hull endpoints ``(lower, upper)`` of a nonempty node."""
    if node.empty:
        raise EmptyNode(f"{node.kind}{node.prefix} is empty")
    return node._dis.bounds_exact(node._rec)


def nominal_box(kind: str, alpha: NcfExpansion, prefix: Sequence[int]):
    """The value ranges ``[S, S+D_n-D_{n+1}]`` (A) and ``[S+D_n-D_{n+1}, S+D_n]`` (B)."""
    n = len(prefix)
    S = sum((c * alpha.D(k) for k, c in enumerate(prefix, start=1)), Fraction(0))
    mid = S + alpha.D(n) - alpha.D(n + 1)
    if kind == "A":
        return S, mid
    if kind == "B":
        return mid, S + alpha.D(n)
    return S, S + alpha.D(n)


# -- Hall's condition ---------------------------------------------------------

@dataclass
class HallReport:
    kind: str
    s: int
    depth: int
    pairs_checked: int = 0
    nodes: list = field(default_factory=list)  # node count per level
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"kind": self.kind, "s": self.s, "depth": self.depth,
                "pairsChecked": self.pairs_checked, "nodesPerLevel": self.nodes,
                "violations": [{"left": list(a), "right": list(b), "level": lv}
                               for lv, a, b in self.violations]}


def _pair_margins(l1, h1, l2, h2):
    """Margins of ``l1 l2 <= h1 h1`` and ``l2 l2 <= h1 h2``."""
    return h1 * h1 - l1 * l2, h1 * h2 - l2 * l2


def hall_condition_check(tree, depth: Optional[int] = None, *, alpha: Optional[NcfExpansion] = None,
                         s: Optional[int] = None, stop_at_first: bool = False) -> HallReport:
    """Check ``l1 l2 <= h1^2`` and ``l2^2 <= h1 h2`` for adjacent nonempty siblings.

    ``tree`` is a :class:`Dissection`, a kind string (``"E"``/``"F"``, then
    ``alpha`` and ``s`` are required) or a materialized list of nodes.
    Float margins closer to zero than a relative ``1e-11`` are re-decided
    with exact arithmetic.
    """
    if isinstance(tree, str):
        tree = Dissection(tree, alpha, s)
    if isinstance(tree, list):
        return _hall_on_nodes(tree)
    dis: Dissection = tree
    depth = 0 if depth is None else depth
    rep = HallReport(dis.kind, dis.s, depth)
    for lv, groups in enumerate(dis.levels(depth)):
        rep.nodes.append(sum(len(g) for g in groups))
        for g in groups:
            bnds = [dis.bounds_float(r) for r in g]
            for j in range(len(g) - 1):
                rep.pairs_checked += 1
                l1, h1 = bnds[j]
                l2, h2 = bnds[j + 1]
                m1, m2 = _pair_margins(l1, h1, l2, h2)
                if min(m1, m2) < _REL_TOL:
                    L1, H1 = dis.bounds_exact(g[j])
                    L2, H2 = dis.bounds_exact(g[j + 1])
                    ok = L1 * L2 <= H1 * H1 and L2 * L2 <= H1 * H2
                else:
                    ok = True
                if not ok:
                    rep.violations.append((lv, g[j][1] + (g[j][0],), g[j + 1][1] + (g[j + 1][0],)))
                    if stop_at_first:
                        return rep
    return rep


def _hall_on_nodes(roots: list[DissectionNode]) -> HallReport:
    kind = "F" if roots and roots[0].kind == "C" else "E"
    rep = HallReport(kind, roots[0].s if roots else 0, 0)

    def visit(group, lv):
        live = [n for n in group if not n.empty]
        for a, b in zip(live, live[1:]):
            rep.pairs_checked += 1
            L1, H1 = endpoints(a)
            L2, H2 = endpoints(b)
            if not (L1 * L2 <= H1 * H1 and L2 * L2 <= H1 * H2):
                rep.violations.append((lv, a.prefix + (a.kind,), b.prefix + (b.kind,)))
        for n in live:
            if n.children:
                rep.depth = max(rep.depth, lv + 1)
                visit(n.children, lv + 1)

    visit(roots, 0)
    return rep


def find_s0(alpha: NcfExpansion, depth: int = 10, s_max: int = 40,
            s_min: Optional[int] = None) -> tuple[Optional[int], dict]:
    """Smallest ``s >= N`` for which both dissections pass Hall's check to ``depth``."""
    N = structural_bounds(expansion=alpha).N
    s = max(N, s_min or N)
    tried = {}
    while s <= s_max:
        reports = {}
        ok = True
        for kind in ("F", "E"):
            rep = hall_condition_check(Dissection(kind, alpha, s), depth, stop_at_first=True)
            reports[kind] = rep
            if not rep.ok:
                ok = False
                break
        tried[s] = reports
        if ok:
            return s, tried
        s += 1
    return None, tried


# -- product window ------------------------------------------------------------

@dataclass(frozen=True)
class ProductWindow:
    P1: Fraction
    P2: Fraction
    s: int
    N: int
    R: Fraction

    @property
    def nonempty(self) -> bool:
        return self.P2 >= self.P1

    def to_json(self) -> dict:
        return {"P1": str(self.P1), "P2": str(self.P2), "s": self.s, "N": self.N,
                "R": str(self.R), "nonempty": self.nonempty}


def product_window(N: int, s: int) -> ProductWindow:
    """``P1 = R^(2s) / (1 - R^(s-N))^2`` and ``P2 = 1 - R^(s-N)`` with ``R = N/(N+1)``."""
    if s <= N:
        raise ValueError("need s > N")
    R = Fraction(N, N + 1)
    P2 = 1 - R ** (s - N)
    P1 = R ** (2 * s) / P2 ** 2
    return ProductWindow(P1, P2, s, N, R)


# -- constructive witness --------------------------------------------------------

def product_contains_interval_witness(alpha_minus: NcfExpansion, alpha_plus_shifted: NcfExpansion,
                                      s: int, target, digits_budget: Optional[int] = None,
                                      window: Optional[ProductWindow] = None):
    """Find ``e`` in ``E(alpha-, s)`` and ``f`` in ``F(alpha+_{r+1}, s)`` with ``e f`` near ``target``.

    Depth-first descent through both dissections keeps ``target`` inside the
    product of the current hulls, refining the relatively wider factor.
    Returns ``(e_word, f_word, error_bound)`` where the words are the lower
    endpoint words of the final nodes and ``|e f - target| <= error_bound``.

    The default depth is ``s - 1``: below that the ``a - 2`` runs of length
    ``s`` open gaps that Hall's condition no longer covers.
    """
    if digits_budget is None:
        digits_budget = s - 1
    target = Fraction(target) if not isinstance(target, Surd) else target
    if window is not None and not (window.P1 <= target <= window.P2):
        raise TargetOutsideWindow(f"target {float(target)} outside [P1, P2]")
    E = Dissection("E", alpha_minus, s)
    F = Dissection("F", alpha_plus_shifted, s)
    tf = float(target)
    Eroots = [r for r in E.roots() if E.aut.live(r[4])]
    Froots = [r for r in F.roots() if F.aut.live(r[4])]
    e_lo = min(E.bounds_float(r)[0] for r in Eroots)
    e_hi = max(E.bounds_float(r)[1] for r in Eroots)
    f_lo, f_hi = F.bounds_float(Froots[0])
    if not (e_lo * f_lo <= tf <= e_hi * f_hi):
        raise TargetOutsideWindow("target outside the hull product")
    budget = [200000]
    # float hulls carry rounding of a few dozen ulps; leaves are settled exactly
    slack = 64 * sys.float_info.epsilon * max(tf, 1.0)

    def rec(enodes, fnodes):
        budget[0] -= 1
        if budget[0] < 0:
            return None
        for e in enodes:
            el, eh = E.bounds_float(e)
            for f in fnodes:
                fl, fh = F.bounds_float(f)
                if not (el * fl - slack <= tf <= eh * fh + slack):
                    continue
                de, df = len(e[1]), len(f[1])
                if de >= digits_budget and df >= digits_budget:
                    xl, xh = E.bounds_exact(e)
                    yl, yh = F.bounds_exact(f)
                    if xl * yl <= target <= xh * yh:
                        return e, f
                    continue
                # refine the factor with the larger relative width
                rel_e = (eh - el) / max(eh, 1e-300)
                rel_f = (fh - fl) / max(fh, 1e-300)
                if (rel_e >= rel_f and de < digits_budget) or df >= digits_budget:
                    got = rec(E.children(e), [f])
                else:
                    got = rec([e], F.children(f))
                if got is not None:
                    return got
        return None

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20 * digits_budget + 1000))
    try:
        found = rec(Eroots, Froots)
    finally:
        sys.setrecursionlimit(old)
    if found is None:
        raise TargetOutsideWindow("descent failed to locate a witness pair")
    e, f = found
    en, fn = E.node(e), F.node(f)
    el, eh = E.bounds_exact(e)
    fl, fh = F.bounds_exact(f)
    bound = eh * fh - el * fl
    return en.lower_word, fn.lower_word, bound
