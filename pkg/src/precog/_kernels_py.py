"""Pure-Python tokenizer kernels.

Fallback for the compiled ``precog._kernels`` extension; both modules expose
the same two functions and must stay behaviorally identical (enforced by
tests). The compiled variant is preferred at import time by
``precog.tokenizer`` unless PRECOG_PURE_PYTHON is set.
"""


def split_words(text):
    """Split text into words: maximal alphanumeric runs plus one word per
    non-alphanumeric, non-whitespace character.

    "Hello, world!" -> ["Hello", ",", "world", "!"]
    """
    words = []
    run = []
    for ch in text:
        if ch.isspace():
            if run:
                words.append("".join(run))
                run = []
        elif ch.isalnum():
            run.append(ch)
        else:
            if run:
                words.append("".join(run))
                run = []
            words.append(ch)
    if run:
        words.append("".join(run))
    return words


def wordpiece(word, entries, max_chars):
    """Greedy longest-match-first decomposition of one word.

    Continuation pieces carry the "##" prefix. Returns the piece list, or
    None when the word has no valid decomposition (caller emits the unknown
    token). Words longer than max_chars are rejected outright.
    """
    n = len(word)
    if n == 0 or n > max_chars:
        return None
    pieces = []
    start = 0
    while start < n:
        end = n
        piece = None
        while start < end:
            sub = word[start:end]
            if start > 0:
                sub = "##" + sub
            if sub in entries:
                piece = sub
                break
            end -= 1
        if piece is None:
            return None
        pieces.append(piece)
        start = end
    return pieces
