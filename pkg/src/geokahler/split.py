"""Jet-level algebra of a splitting TM = V ⊕ H with V spanned by given fields.

Everything here is a smooth function of the jets of ``g`` and the spanning
fields, so derivatives pass straight through: projectors, the quarter turn
on the oriented plane H, and the almost complex structure J with Jk = t,
Jt = −k on V.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import jets
from .fields import Field, MetricField
from .jets import Jet, einsum


class DegenerateSplitError(ValueError):
    pass


@lru_cache(maxsize=None)
def _eps(n):
    return jets.levi_civita(n)


@dataclass
class SplitJets:
    """Jets of the splitting data at one point and order."""

    G: Jet
    V: list  # spanning vector jets
    gram: list  # gram[a][b] = g(V_a, V_b)
    dual: list  # dual covectors θ^a with θ^a(V_b) = δ^a_b, vanishing on H
    PV: Jet
    PH: Jet
    rot: Jet  # quarter turn on H (zero on V)
    gram_det: Jet


def split_jets(g: MetricField, vfields, p, order: int, orientation: int = 1) -> SplitJets:
    n = g.chart.dim
    m = len(vfields)
    if m + 2 != n:
        raise ValueError(f"need {n - 2} spanning fields for a {n}-dimensional chart")
    G = g.jet(p, order)
    V = [X.jet(p, order) for X in vfields]
    low = [G @ v for v in V]
    gram = [[V[a] @ low[b] for b in range(m)] for a in range(m)]
    if m == 1:
        gdet = gram[0][0]
        inv = [[1.0 / gdet]]
    else:
        gdet = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0]
        inv = [[gram[1][1] / gdet, -gram[0][1] / gdet], [-gram[1][0] / gdet, gram[0][0] / gdet]]
    scale = float(np.prod([max(1.0, abs(float(gram[a][a].value))) for a in range(m)]))
    if abs(float(gdet.value)) < 1e-12 * scale:
        raise DegenerateSplitError("V degenerate: the spanning fields have a singular Gram matrix")
    dual = []
    for a in range(m):
        acc = None
        for b in range(m):
            term = inv[a][b] * low[b]
            acc = term if acc is None else acc + term
        dual.append(acc)
    PV = None
    for a in range(m):
        outer = einsum("i,j->ij", V[a], dual[a])
        PV = outer if PV is None else PV + outer
    PH = PV * -1.0 + np.eye(n)

    Ginv = jets.inv(G)
    vol = jets.sqrt(jets.fabs(jets.det(G)))
    eps = _eps(n)
    if m == 2:
        W = einsum("ijlm,i,j->lm", eps, V[0], V[1])
    else:
        W = einsum("ilm,i->lm", eps, V[0])
    factor = (vol / jets.sqrt(jets.fabs(gdet))) * float(orientation)
    rot = einsum("am,lm,lb->ab", Ginv, W, PH) * factor
    return SplitJets(G, V, gram, dual, PV, PH, rot, gdet)


def acs_jet(g: MetricField, k: Field, t: Field, p, order: int, orientation: int = 1) -> Jet:
    """J with Jk = t, Jt = −k and the oriented quarter turn on H."""
    s = split_jets(g, (k, t), p, order, orientation)
    K, T = s.V
    JV = einsum("i,j->ij", T, s.dual[0]) - einsum("i,j->ij", K, s.dual[1])
    return JV + s.rot


def pick_pivot(s: SplitJets) -> int:
    """Index of the coordinate seed used for the first H frame vector."""
    PH = s.PH.value
    G = s.G.value
    norms = np.array([np.sqrt(max(PH[:, a] @ G @ PH[:, a], 0.0)) for a in range(PH.shape[0])])
    best = norms.max()
    if best <= 1e-6:
        raise DegenerateSplitError("H projection of every coordinate direction vanishes")
    return int(np.argmax(norms >= 0.1 * best))


def frame_jets(g: MetricField, vfields, p, order: int, orientation: int, pivot: int):
    """Oriented g-orthonormal frame (x, y) of H from a frozen coordinate seed."""
    s = split_jets(g, vfields, p, order, orientation)
    h = s.PH[:, pivot]
    norm2 = h @ (s.G @ h)
    if float(norm2.value) <= 0:
        raise DegenerateSplitError("H is not spacelike: seed projection has non-positive length")
    x = h * jets.power(norm2, -0.5)
    y = s.rot @ x
    return x, y
