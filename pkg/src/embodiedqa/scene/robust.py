"""Placement robustness against one-voxel reconstruction error.

A reconstructed box can come out up to one voxel smaller on a face that no
camera ray grazed.  Scenes are generated so that no pairwise relation flips
under such a shrink; otherwise ground truth and a faithful reconstruction
could disagree for reasons that have nothing to do with the pipeline.
"""
from __future__ import annotations

from ..config import RelationConfig
from ..geometry import Box
from ..recon.relations import directed_relations


def shrunk_variants(box: Box, delta: float):
    for axis in range(3):
        for upper in (False, True):
            yield box.move_face(axis, upper, delta)


def robust_pair(a: Box, a_cat: str, b: Box, b_cat: str, cfg: RelationConfig, delta: float) -> bool:
    base = directed_relations(a, a_cat, b, b_cat, cfg)
    for moved in shrunk_variants(a, delta):
        if directed_relations(moved, a_cat, b, b_cat, cfg) != base:
            return False
    for moved in shrunk_variants(b, delta):
        if directed_relations(a, a_cat, moved, b_cat, cfg) != base:
            return False
    return True
