"""Book text to word-count data.

Cleaning pipeline (in this order):

1. lowercase (``str.lower``, Unicode simple case mapping);
2. every maximal run of numeral characters (Unicode categories Nd, Nl, No,
   so superscripts and roman-numeral signs too) becomes a single ``#``;
3. dash punctuation (Unicode category Pd: hyphens, en and em dashes) becomes a
   space, every other punctuation, symbol or format character is deleted in
   place (so ``don't`` becomes ``dont``); ``#`` is kept;
4. split on whitespace.
"""

import hashlib
import os
import re
import tempfile
import unicodedata
import urllib.error
import urllib.request
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyInput, MalformedBoilerplate, NetworkError, NotCached
from .models import empirical_rank_map

CACHE_ENV = "ZIPFEST_CACHE_DIR"
OFFLINE_ENV = "ZIPFEST_OFFLINE"

_DIGITS = re.compile(r"0+")
_START = re.compile(r"^\*\*\*\s*START OF (THE|THIS) PROJECT GUTENBERG EBOOK.*$", re.I | re.M)
_END = re.compile(r"^\*\*\*\s*END OF (THE|THIS) PROJECT GUTENBERG EBOOK.*$", re.I | re.M)


def _char_action(ch):
    if ch == "#":
        return ch
    cat = unicodedata.category(ch)
    if cat == "Pd":
        return " "
    if cat[0] in "PS" or cat == "Cf":
        return ""
    return ch


class _Translator(dict):
    """Lazy str.translate table over the whole Unicode range."""

    def __init__(self, action):
        super().__init__()
        self._action = action

    def __missing__(self, code):
        out = self._action(chr(code))
        self[code] = out
        return out


def _numeral_action(ch):
    return "0" if unicodedata.category(ch)[0] == "N" else ch


_NUMERALS = _Translator(_numeral_action)
_TABLE = _Translator(_char_action)


def clean_text(raw):
    """Tokenize text into lowercase words with numerals replaced by ``#``."""
    text = _DIGITS.sub("#", raw.lower().translate(_NUMERALS))
    return text.translate(_TABLE).split()


def word_counts(tokens):
    """CountVector of word frequencies, most frequent first."""
    if not tokens:
        raise EmptyInput("no tokens to count")
    return empirical_rank_map(Counter(tokens))


@dataclass(frozen=True)
class FetchedText:
    text: str
    source: str
    boilerplate_stripped: bool
    from_cache: bool = False


def strip_gutenberg(text):
    """Remove the Project Gutenberg header and licence footer.

    Returns (body, stripped); when the delimiters are missing the full text is
    returned with ``stripped=False``.
    """
    start = _START.search(text)
    end = _END.search(text, start.end() if start else 0)
    if not start or not end:
        return text, False
    return text[start.end(): end.start()], True


def default_cache_dir():
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "zipfest"


def _cache_path(cache_dir, source):
    key = hashlib.sha256(source.encode("utf-8")).hexdigest()[:32]
    return Path(cache_dir) / f"{key}.txt"


def _atomic_write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _is_url(source):
    return bool(re.match(r"^[a-z][a-z0-9+.-]*://", source, re.I))


def fetch_text(source, cache_dir=None, offline=None, timeout=60):
    """Read a local file or download a URL (through a cache) and strip boilerplate.

    Parameters
    ----------
    source : str or path
        Local path or http(s) URL.
    cache_dir : path, optional
        Cache directory; defaults to ``$ZIPFEST_CACHE_DIR`` or ``~/.cache/zipfest``.
    offline : bool, optional
        Never touch the network; defaults to ``$ZIPFEST_OFFLINE`` being set.

    Raises
    ------
    NotCached
        Offline and the URL is not cached.
    NetworkError
        The download failed.
    """
    source = str(source)
    if offline is None:
        offline = bool(os.environ.get(OFFLINE_ENV))
    from_cache = False
    if not _is_url(source):
        raw = Path(source).read_text(encoding="utf-8-sig", errors="replace")
    else:
        path = _cache_path(cache_dir or default_cache_dir(), source)
        if path.exists():
            raw = path.read_text(encoding="utf-8")
            from_cache = True
        elif offline:
            raise NotCached(f"{source} is not cached in {path.parent} and offline mode is on")
        else:
            try:
                with urllib.request.urlopen(source, timeout=timeout) as resp:
                    raw = resp.read().decode("utf-8-sig", errors="replace")
            except (urllib.error.URLError, OSError) as exc:
                raise NetworkError(f"could not download {source}: {exc}") from exc
            _atomic_write(path, raw)
    body, stripped = strip_gutenberg(raw)
    if not stripped:
        warnings.warn(f"no Project Gutenberg delimiters in {source}; using the full text",
                      MalformedBoilerplate, stacklevel=2)
    return FetchedText(body, source, stripped, from_cache)
