"""Token normalization shared by the lexical metrics and the stub embedder."""

# ASCII punctuation plus the typographic quotes/dashes LLM output tends to carry.
_STRIP_CHARS = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~‘’“”–—…«»"


def tokenize(text: str) -> list[str]:
    """Split on whitespace, case-fold, strip punctuation from token edges.

    Empty text yields an empty list. Tokens that are pure punctuation are
    dropped, so every returned token is non-empty and whitespace-free.
    """
    tokens = []
    for piece in text.split():
        token = piece.casefold().strip(_STRIP_CHARS)
        if token:
            tokens.append(token)
    return tokens
