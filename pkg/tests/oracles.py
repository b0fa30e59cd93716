"""Independent naive reference implementations used to cross-check the metrics,
the retrieval index, and the special functions. These deliberately share no
code with the package beyond the tokenizer definition they restate."""

import math

import mpmath


def naive_tokens(text):
    strip = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~‘’“”–—…«»"
    out = []
    for piece in text.split():
        tok = piece.casefold().strip(strip)
        if tok:
            out.append(tok)
    return out


def _gram_dict(tokens, n):
    grams = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i:i + n])
        grams[g] = grams.get(g, 0) + 1
    return grams


def _f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def rouge_n_oracle(candidate, reference, n):
    cand = _gram_dict(naive_tokens(candidate), n)
    ref = _gram_dict(naive_tokens(reference), n)
    if not cand or not ref:
        return 0.0, 0.0, 0.0
    overlap = 0
    for gram, count in cand.items():
        if gram in ref:
            overlap += count if count < ref[gram] else ref[gram]
    p = overlap / sum(cand.values())
    r = overlap / sum(ref.values())
    return p, r, _f1(p, r)


def rouge_l_oracle(candidate, reference):
    a = naive_tokens(candidate)
    b = naive_tokens(reference)
    if not a or not b:
        return 0.0, 0.0, 0.0
    # full DP table
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[len(a)][len(b)]
    p = lcs / len(a)
    r = lcs / len(b)
    return p, r, _f1(p, r)


def meteor_oracle(candidate, reference, alpha=0.9, beta=3.0, gamma=0.5):
    """Same alignment rule, restated: each candidate token takes the leftmost
    unused occurrence of itself in the reference (exact matches only)."""
    cand = naive_tokens(candidate)
    ref = naive_tokens(reference)
    if not cand or not ref:
        return 0.0
    positions = {}
    for j, token in enumerate(ref):
        positions.setdefault(token, []).append(j)
    pairs = []
    for i, token in enumerate(cand):
        available = positions.get(token)
        if available:
            pairs.append((i, available.pop(0)))
    if not pairs:
        return 0.0
    m = len(pairs)
    chunks = 1
    for k in range(1, m):
        ci, ri = pairs[k]
        pi, pj = pairs[k - 1]
        if ci != pi + 1 or ri != pj + 1:
            chunks += 1
    p = m / len(cand)
    r = m / len(ref)
    fmean = p * r / (alpha * p + (1 - alpha) * r)
    return fmean * (1 - gamma * (chunks / m) ** beta)


def chrf_pp_oracle(candidate, reference, char_order=6, word_order=2, beta=2.0):
    def char_grams(text, n):
        stream = "".join(text.casefold().split())
        grams = {}
        for i in range(len(stream) - n + 1):
            g = stream[i:i + n]
            grams[g] = grams.get(g, 0) + 1
        return grams

    ps, rs = [], []
    cand_words = naive_tokens(candidate)
    ref_words = naive_tokens(reference)
    gram_pairs = [(char_grams(candidate, n), char_grams(reference, n)) for n in range(1, char_order + 1)]
    gram_pairs += [
        (_gram_dict(cand_words, n), _gram_dict(ref_words, n)) for n in range(1, word_order + 1)
    ]
    for cand, ref in gram_pairs:
        if not cand and not ref:
            continue
        overlap = sum(min(count, ref.get(g, 0)) for g, count in cand.items())
        ps.append(overlap / sum(cand.values()) if cand else 0.0)
        rs.append(overlap / sum(ref.values()) if ref else 0.0)
    if not ps:
        return 0.0
    p = sum(ps) / len(ps)
    r = sum(rs) / len(rs)
    denom = beta * beta * p + r
    if denom == 0:
        return 0.0
    return 100.0 * (1 + beta * beta) * p * r / denom


def topk_oracle(ids_and_vectors, query_vector, k):
    """Brute-force full scan with plain-python cosine; ties by id ascending."""
    qn = math.sqrt(math.fsum(x * x for x in query_vector))
    scored = []
    for chunk_id, vec in ids_and_vectors:
        vn = math.sqrt(math.fsum(x * x for x in vec))
        if qn == 0.0 or vn == 0.0:
            score = 0.0
        else:
            score = math.fsum(a * b for a, b in zip(query_vector, vec)) / (qn * vn)
        scored.append((chunk_id, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return [chunk_id for chunk_id, _ in scored[:k]]


def reg_beta_quadrature(t, a, b, dps=40):
    """Adaptive quadrature of the beta integral at high precision."""
    with mpmath.workdps(dps):
        if t == 0:
            return 0.0
        if t == 1:
            return 1.0
        integrand = lambda u: u ** (a - 1) * (1 - u) ** (b - 1)
        numerator = mpmath.quad(integrand, [0, t])
        total = mpmath.beta(a, b)
        return float(numerator / total)


def f_cdf_quadrature(x, d1, d2, dps=40):
    """Numerical integration of the F density from 0 to x."""
    with mpmath.workdps(dps):
        if x == 0:
            return 0.0
        half1 = mpmath.mpf(d1) / 2
        half2 = mpmath.mpf(d2) / 2
        coeff = (mpmath.mpf(d1) / d2) ** half1 / mpmath.beta(half1, half2)

        def pdf(u):
            return coeff * u ** (half1 - 1) * (1 + mpmath.mpf(d1) * u / d2) ** (-(half1 + half2))

        return float(mpmath.quad(pdf, [0, x]))
