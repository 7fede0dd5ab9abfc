# cython: language_level=3
"""Compiled tokenizer kernels.

Mirror of precog._kernels_py with typed loop indices; the two must stay
behaviorally identical (see tests/test_kernels.py).
"""


def split_words(str text):
    cdef Py_ssize_t i, n = len(text)
    cdef Py_ssize_t run_start = -1
    cdef str ch
    words = []
    for i in range(n):
        ch = text[i]
        if ch.isspace():
            if run_start >= 0:
                words.append(text[run_start:i])
                run_start = -1
        elif ch.isalnum():
            if run_start < 0:
                run_start = i
        else:
            if run_start >= 0:
                words.append(text[run_start:i])
                run_start = -1
            words.append(ch)
    if run_start >= 0:
        words.append(text[run_start:n])
    return words


def wordpiece(str word, entries, Py_ssize_t max_chars):
    cdef Py_ssize_t n = len(word)
    cdef Py_ssize_t start, end
    cdef str sub
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
