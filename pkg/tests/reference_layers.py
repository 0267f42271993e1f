"""Scalar-loop reference implementations of every network layer.

These are deliberately written with plain Python loops and math.* calls,
no numpy vectorization and no shared code with the library, so they can
serve as an independent oracle for the vectorized layers.
"""

import math


def _elu(v):
    return v if v >= 0 else math.exp(v) - 1.0


def _sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


def _matvec(m, v):
    return [sum(m[r][c] * v[c] for c in range(len(v))) for r in range(len(m))]


def ref_gat(x, adj, weights, attn_vectors, slope=0.2):
    """Multi-head neighbor attention, heads averaged then ELU.

    x: N x F nested lists; adj: N x N 0/1; weights: per head F' x F;
    attn_vectors: per head length 2F'. Nodes without incoming neighbors
    attend to themselves alone.
    """
    n = len(x)
    f_in = len(x[0])
    f_out = len(weights[0])
    acc = [[0.0] * f_out for _ in range(n)]
    for w, a in zip(weights, attn_vectors):
        h = [[sum(w[r][c] * x[i][c] for c in range(f_in)) for r in range(f_out)] for i in range(n)]
        for i in range(n):
            neighbors = [j for j in range(n) if adj[j][i] == 1]
            if not neighbors:
                neighbors = [i]
            raw = []
            for j in neighbors:
                cat = list(h[i]) + list(h[j])
                e = sum(a[d] * cat[d] for d in range(2 * f_out))
                raw.append(e if e >= 0 else slope * e)
            peak = max(raw)
            exps = [math.exp(v - peak) for v in raw]
            total = sum(exps)
            for j, weight in zip(neighbors, (v / total for v in exps)):
                for d in range(f_out):
                    acc[i][d] += weight * h[j][d]
    k = len(weights)
    return [[_elu(acc[i][d] / k) for d in range(f_out)] for i in range(n)]


def ref_gcl(x, counts, w):
    """Self-loop augmented, symmetrically normalized convolution, then ELU."""
    n = len(counts)
    f_in = len(x[0])
    f_out = len(w[0])
    c_hat = [[counts[u][v] + (1.0 if u == v else 0.0) for v in range(n)] for u in range(n)]
    degree = [sum(c_hat[u]) for u in range(n)]
    prop = [
        [c_hat[u][v] / (math.sqrt(degree[u]) * math.sqrt(degree[v])) for v in range(n)]
        for u in range(n)
    ]
    px = [[sum(prop[u][v] * x[v][c] for v in range(n)) for c in range(f_in)] for u in range(n)]
    return [
        [_elu(sum(px[u][c] * w[c][d] for c in range(f_in))) for d in range(f_out)]
        for u in range(n)
    ]


def ref_fuse(feature_maps, eps=1e-5):
    """Element-wise sum, per-row layer normalization, row-major flatten."""
    n = len(feature_maps[0])
    f = len(feature_maps[0][0])
    total = [[sum(fm[i][d] for fm in feature_maps) for d in range(f)] for i in range(n)]
    flat = []
    for row in total:
        mu = sum(row) / f
        var = sum((v - mu) ** 2 for v in row) / f
        denom = math.sqrt(var + eps)
        flat.extend((v - mu) / denom for v in row)
    return flat


def ref_gru(y, h_prev, gates):
    """gates: dict with w_update/u_update/b_update and reset/cand likewise."""
    wy_z = _matvec(gates["w_update"], y)
    uh_z = _matvec(gates["u_update"], h_prev)
    wy_r = _matvec(gates["w_reset"], y)
    uh_r = _matvec(gates["u_reset"], h_prev)
    wy_n = _matvec(gates["w_cand"], y)
    uh_n = _matvec(gates["u_cand"], h_prev)
    h = []
    for r in range(len(h_prev)):
        z = _sigmoid(wy_z[r] + uh_z[r] + gates["b_update"][r])
        reset = _sigmoid(wy_r[r] + uh_r[r] + gates["b_reset"][r])
        cand = math.tanh(wy_n[r] + reset * uh_n[r] + gates["b_cand"][r])
        h.append((1.0 - z) * h_prev[r] + z * cand)
    return h


def ref_temporal_attention(h_seq, heads):
    """heads: list of (w_q, w_k, w_v), each h_rnn x f_attn nested lists.

    Scaled dot-product attention where position i only sees j <= i;
    head outputs concatenate along the feature axis.
    """
    length = len(h_seq)
    out = [[] for _ in range(length)]
    for w_q, w_k, w_v in heads:
        f_attn = len(w_q[0])
        q = [[sum(h_seq[t][c] * w_q[c][d] for c in range(len(w_q))) for d in range(f_attn)] for t in range(length)]
        k = [[sum(h_seq[t][c] * w_k[c][d] for c in range(len(w_k))) for d in range(f_attn)] for t in range(length)]
        v = [[sum(h_seq[t][c] * w_v[c][d] for c in range(len(w_v))) for d in range(f_attn)] for t in range(length)]
        scale = 1.0 / math.sqrt(f_attn)
        for i in range(length):
            raw = [
                sum(q[i][d] * k[j][d] for d in range(f_attn)) * scale for j in range(i + 1)
            ]
            peak = max(raw)
            exps = [math.exp(val - peak) for val in raw]
            total = sum(exps)
            weights = [val / total for val in exps]
            out[i].extend(
                sum(weights[j] * v[j][d] for j in range(i + 1)) for d in range(f_attn)
            )
    return out


def ref_decode(z, w_hidden, b_hidden, w_out, b_out, n):
    """Two ReLU layers; the flat output reshapes row-major to n x n."""
    h_dim = len(b_hidden)
    hidden = [
        max(0.0, sum(z[c] * w_hidden[c][r] for c in range(len(z))) + b_hidden[r])
        for r in range(h_dim)
    ]
    flat = [
        max(0.0, sum(hidden[c] * w_out[c][o] for c in range(h_dim)) + b_out[o])
        for o in range(n * n)
    ]
    return [[flat[i * n + j] for j in range(n)] for i in range(n)]


def ref_forward(snapshots, motif_counts, x, params, n):
    """End-to-end composition of the scalar references.

    snapshots: list of adjacency nested lists; motif_counts: per snapshot,
    list of count matrices (one per active transform, order matching the
    GCL weights); params: dict with gat_weights, gat_attn, gcl_weights
    (list), gru gates dict, attn_heads, decoder tuple.
    """
    h_prev = [0.0] * len(params["gru"]["b_update"])
    states = []
    for adj, counts in zip(snapshots, motif_counts):
        maps = [ref_gat(x, adj, params["gat_weights"], params["gat_attn"])]
        maps.extend(ref_gcl(x, c, w) for c, w in zip(counts, params["gcl_weights"]))
        fused = ref_fuse(maps)
        h_prev = ref_gru(fused, h_prev, params["gru"])
        states.append(h_prev)
    z_seq = ref_temporal_attention(states, params["attn_heads"])
    w_hidden, b_hidden, w_out, b_out = params["decoder"]
    return ref_decode(z_seq[-1], w_hidden, b_hidden, w_out, b_out, n)
