"""Brute-force reference for the rerank + multiple-choice pipeline.

Everything is recomputed with plain Python loops from the raw resources:
the encoder forward pass, prototypes, kernel scores, the neighborhood and
its mixture, the final sort, and the pessimistic groundtruth rank. No
scoring code is shared with the package.
"""
import math


def forward(params, vec):
    """Plain-Python forward pass through the two-layer encoder."""
    w1, b1, w2, b2 = params.w1.tolist(), params.b1.tolist(), params.w2.tolist(), params.b2.tolist()
    hidden = [
        math.tanh(sum(vec[i] * w1[i][j] for i in range(len(vec))) + b1[j])
        for j in range(len(b1))
    ]
    return [
        sum(hidden[j] * w2[j][k] for j in range(len(hidden))) + b2[k]
        for k in range(len(b2))
    ]


def euclid(u, v):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))


def cosine_dist(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return 1.0 - dot / (nu * nv)


def word_prototype(params, sense_vectors, sense_ids):
    encoded = [forward(params, sense_vectors[s]) for s in sense_ids]
    return [sum(col) / len(col) for col in zip(*encoded)]


def kernel_scores(distances, width):
    raw = [math.exp(-d / width) for d in distances]
    total = sum(raw)
    return [r / total for r in raw]


def neighborhood_of(word, vocab, word_vectors, size):
    others = sorted(w for w in set(vocab) if w != word)
    ranked = sorted(others, key=lambda w: (cosine_dist(word_vectors[word], word_vectors[w]), w))
    return [word] + ranked[: size - 1]


def rerank_order(
    params,
    sentence_vectors,
    senses_of_word,
    candidate_ids,
    word,
    h_m,
    *,
    use_cf=False,
    word_vectors=None,
    vocab=(),
    h_cf=0.1,
    size=5,
):
    """Candidate positions (0-based input ranks) in reranked order."""
    encoded = [forward(params, sentence_vectors[c]) for c in candidate_ids]

    def scores_for(target_word):
        proto = word_prototype(params, sentence_vectors, senses_of_word[target_word])
        return kernel_scores([euclid(e, proto) for e in encoded], h_m)

    if use_cf and size > 1:
        neighbors = neighborhood_of(word, vocab, word_vectors, size)
        weights = [
            math.exp(-cosine_dist(word_vectors[word], word_vectors[n]) / h_cf) for n in neighbors
        ]
        per_neighbor = [scores_for(n) for n in neighbors]
        mixed = [
            sum(w * s[k] for w, s in zip(weights, per_neighbor))
            for k in range(len(candidate_ids))
        ]
        total = sum(mixed)
        scores = [m / total for m in mixed]
    else:
        scores = scores_for(word)
    return sorted(range(len(candidate_ids)), key=lambda i: (-scores[i], i))


def groundtruth_rank(sentence_vectors, prediction_id, groundtruth_id, negative_ids):
    """Pessimistic 1-based rank of the groundtruth among the five options."""
    pred = sentence_vectors[prediction_id]
    d_true = euclid(pred, sentence_vectors[groundtruth_id])
    rank = 1
    for neg in negative_ids:
        if euclid(pred, sentence_vectors[neg]) <= d_true:
            rank += 1
    return rank


def mean_reciprocal_rank(ranks):
    return sum(1.0 / r for r in ranks) / len(ranks)
