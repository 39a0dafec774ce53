"""Crop-cascade planning and constrained best-picture selection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import FaceCountCategory

CROP_STEP_W = 600
CROP_STEP_H = 400
MIN_CROP_W = 1200
MIN_CROP_H = 800
MAX_CROPS = 6

CATEGORY_ORDER = (FaceCountCategory.ONE, FaceCountCategory.TWO, FaceCountCategory.THREE_PLUS)


@dataclass(frozen=True)
class SelectionConstraints:
    per_category_quota: int = 8
    one_per_burst: bool = True
    total: int = 24


@dataclass(frozen=True)
class ScoredPicture:
    picture_id: str
    burst_id: str
    category: FaceCountCategory
    score: float


def crop_cascade(width: int, height: int) -> list[tuple[int, int, int, int]]:
    """Centered crops shrinking 600x400 per step (up to six), then a final
    4:3 crop of the innermost rectangle. Rectangles are (x_tl, y_tl, x_br, y_br)
    on the original image."""
    plan: list[tuple[int, int, int, int]] = []
    w, h = width, height
    x0, y0 = 0, 0
    for _ in range(MAX_CROPS):
        nw, nh = w - CROP_STEP_W, h - CROP_STEP_H
        if nw < MIN_CROP_W or nh < MIN_CROP_H:
            break
        x0 += CROP_STEP_W // 2
        y0 += CROP_STEP_H // 2
        w, h = nw, nh
        plan.append((x0, y0, x0 + w, y0 + h))
    if not plan:
        return plan
    # final 4:3 crop, centered; the adjusted side rounds down to even
    if w * 3 > h * 4:
        fw = (h * 4 // 3) & ~1
        fh = h
    else:
        fw = w
        fh = (w * 3 // 4) & ~1
    fx = x0 + (w - fw) // 2
    fy = y0 + (h - fh) // 2
    plan.append((fx, fy, fx + fw, fy + fh))
    return plan


def _sorted_categories(candidates: Sequence[ScoredPicture]):
    counts = {cat: 0 for cat in CATEGORY_ORDER}
    for c in candidates:
        counts[c.category] += 1
    # rarest category picks first; ties by canonical category order
    return sorted(CATEGORY_ORDER, key=lambda cat: (counts[cat], CATEGORY_ORDER.index(cat)))


def _ranked(candidates: Sequence[ScoredPicture], cat: FaceCountCategory):
    pool = [c for c in candidates if c.category is cat]
    pool.sort(key=lambda c: (-c.score, c.picture_id))
    return pool


def select_best(
    candidates: Sequence[ScoredPicture], constraints: SelectionConstraints = SelectionConstraints()
) -> list[str]:
    """Greedy quota-and-burst-constrained pick, rarest face-count category first."""
    used_bursts: set[str] = set()
    picked: list[str] = []
    for cat in _sorted_categories(candidates):
        taken = 0
        for c in _ranked(candidates, cat):
            if taken >= constraints.per_category_quota:
                break
            if constraints.one_per_burst and c.burst_id in used_bursts:
                continue
            picked.append(c.picture_id)
            used_bursts.add(c.burst_id)
            taken += 1
    return picked


MAX_ORACLE_CANDIDATES = 20


def selection_oracle(
    candidates: Sequence[ScoredPicture], constraints: SelectionConstraints = SelectionConstraints()
) -> list[str]:
    """Same contract as select_best, recomputed by exhaustive enumeration.

    Per category (in the same rarest-first order) every feasible subset is
    enumerated; the winner maximizes subset size, then is lexicographically
    smallest in rank order. Test-only: refuses more than 20 candidates.
    """
    if len(candidates) > MAX_ORACLE_CANDIDATES:
        raise ValueError(f"oracle limited to {MAX_ORACLE_CANDIDATES} candidates")
    used_bursts: set[str] = set()
    picked: list[str] = []
    for cat in _sorted_categories(candidates):
        pool = _ranked(candidates, cat)
        indexed = list(enumerate(pool))
        best: Optional[tuple[int, tuple[int, ...]]] = None
        max_size = min(constraints.per_category_quota, len(pool))
        for size in range(max_size, -1, -1):
            for combo in itertools.combinations(indexed, size):
                bursts = [c.burst_id for _, c in combo]
                if constraints.one_per_burst:
                    if len(set(bursts)) != size or any(b in used_bursts for b in bursts):
                        continue
                ranks = tuple(i for i, _ in combo)
                if best is None or (-size, ranks) < (-best[0], best[1]):
                    best = (size, ranks)
            if best is not None:
                break
        assert best is not None
        for i in best[1]:
            c = pool[i]
            picked.append(c.picture_id)
            used_bursts.add(c.burst_id)
    return picked
