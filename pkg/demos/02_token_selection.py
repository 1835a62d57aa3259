"""Score visual tokens against the text prompt and keep the top slice.

Importance is text-to-vision attention before softmax, averaged over heads
and text tokens; Top-K then runs per camera view with a configurable quota
split (e.g. 40% of the budget to the scene camera, 60% to the wrist camera).
"""

import numpy as np

from motionprune import (EmbeddingMatrix, ProjectionWeights, Segment,
                         SegmentKind, aggregate_importance, attention_scores,
                         prune_pipeline)

rng = np.random.default_rng(1)
hidden, heads, head_dim = 32, 4, 8
scene, wrist, l_txt = 10, 10, 5

segments = (
    Segment(SegmentKind.BOS, 1),
    Segment(SegmentKind.VIS, scene, view_id=0),
    Segment(SegmentKind.VIS, wrist, view_id=1),
    Segment(SegmentKind.PROP, 1),
    Segment(SegmentKind.TXT, l_txt),
    Segment(SegmentKind.ACT, 4),
    Segment(SegmentKind.EOS, 1),
)
rows = sum(s.length for s in segments)
emb = EmbeddingMatrix(rng.normal(size=(rows, hidden)).astype(np.float32), segments)
weights = ProjectionWeights(
    rng.normal(size=(hidden, hidden)).astype(np.float32),
    rng.normal(size=(hidden, hidden)).astype(np.float32),
    heads, head_dim,
)

scores = attention_scores(emb, weights)          # (heads, L_txt, L_vis)
phi = aggregate_importance(scores, emb.vis_view_lengths())
print("per-token importance (scene view):", np.round(phi.per_view()[0], 2))
print("per-token importance (wrist view):", np.round(phi.per_view()[1], 2))

pruned, decision, phi = prune_pipeline(emb, weights, rho=0.5, alpha=(0.4, 0.6))
print(f"\nkeep k = {decision.k} of {scene + wrist} visual tokens, "
      f"split k_c = {decision.k_c} (scene:wrist = 4:6)")
print("kept scene indices:", decision.kept_indices[0].tolist())
print("kept wrist indices:", decision.kept_indices[1].tolist())
print(f"sequence rows: {emb.rows} -> {pruned.rows}")
