"""Entropy and divergence functionals, all in bits (base-2 logarithms).

Order alpha = 1 is accepted everywhere and routed to the Shannon forms, the
continuous extension of the order-alpha definitions. Zero-probability terms
are dropped from every sum (0 log 0 := 0).
"""

from __future__ import annotations

from math import fsum, log2
from typing import Iterable, NamedTuple, Sequence

from .sourcemodel import InvalidInstance, JointPmf, Pmf


class EntropyValue(NamedTuple):
    bits: float
    order: float


def renyi_from_masses(masses: Iterable[float], alpha: float) -> float:
    """Order-alpha entropy of a nonnegative mass vector.

    (1/(1-alpha)) * log2 sum_i m_i^alpha, with the Shannon form
    -sum m log2 m at alpha = 1.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    ms = [float(m) for m in masses if m > 0]
    if not ms:
        raise ValueError("mass vector has no positive entries")
    if alpha == 1.0:
        return -fsum(m * log2(m) for m in ms)
    return (1.0 / (1.0 - alpha)) * log2(fsum(m**alpha for m in ms))


def renyi_entropy(p: Pmf, alpha: float) -> EntropyValue:
    """Renyi entropy H_alpha of a pmf, in bits."""
    return EntropyValue(renyi_from_masses(p.probs, alpha), alpha)


def shannon_entropy(p: Pmf) -> EntropyValue:
    return renyi_entropy(p, 1.0)


def arimoto_from_conditional_masses(
    py: Sequence[float], masses_by_y: Sequence[Sequence[float]], alpha: float
) -> float:
    """Arimoto combination of per-y mass vectors.

    (alpha/(1-alpha)) * log2 sum_y P(y) (sum_i m_{y,i}^alpha)^(1/alpha);
    alpha = 1 gives the P(y)-weighted average of the Shannon entropies.
    Entries with P(y) = 0 are skipped.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    pairs = [(w, ms) for w, ms in zip(py, masses_by_y) if w > 0]
    if not pairs:
        raise ValueError("no y with positive probability")
    if alpha == 1.0:
        return fsum(w * renyi_from_masses(ms, 1.0) for w, ms in pairs)
    total = fsum(
        w * fsum(float(m) ** alpha for m in ms if m > 0) ** (1.0 / alpha) for w, ms in pairs
    )
    return (alpha / (1.0 - alpha)) * log2(total)


def arimoto_conditional_entropy(j: JointPmf, alpha: float) -> EntropyValue:
    """Arimoto-Renyi conditional entropy H_alpha(X|Y) in bits."""
    py = j.marginal_y()
    masses = []
    for yi in range(len(j.y_alphabet)):
        if py[yi] > 0:
            masses.append((j.probs[:, yi] / py[yi]).tolist())
        else:
            masses.append([])
    return EntropyValue(arimoto_from_conditional_masses(py.tolist(), masses, alpha), alpha)


def kl_divergence(p: Pmf, q: Pmf) -> float:
    """Relative entropy D(p || q) in bits; +inf when p is not dominated by q."""
    if p.alphabet.symbols != q.alphabet.symbols:
        raise InvalidInstance("pmf", "alphabet mismatch between the two distributions")
    terms = []
    for pi, qi in zip(p.probs.tolist(), q.probs.tolist()):
        if pi <= 0:
            continue
        if qi <= 0:
            return float("inf")
        terms.append(pi * log2(pi / qi))
    return fsum(terms)
