"""Short text renderings used in run directories and log lines."""

import re
import unicodedata
from typing import Optional

_DROP = re.compile(r"[^\w\s.=-]")
_SEPARATORS = re.compile(r"[\s_=]+")


def slugify(text: str) -> str:
    """Directory-safe slug of a variant name: ``"lambda=0.5"`` becomes ``"lambda-0.5"``."""
    ascii_text = unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode("ascii")
    return _SEPARATORS.sub("-", _DROP.sub("", ascii_text).strip().lower())


def format_duration(seconds: float) -> str:
    """``MM:SS``, or ``HH:MM:SS`` once an hour has passed."""
    hours, rest = divmod(int(seconds), 3600)
    minutes, secs = divmod(rest, 60)
    if hours:
        return f"{hours:02d}:{minutes:02d}:{secs:02d}"
    return f"{minutes:02d}:{secs:02d}"


def format_metric(value: Optional[float], digits: int = 4) -> str:
    """Fixed-precision rendering; a missing value prints as ``-``."""
    if value is None:
        return "-"
    return f"{value:.{digits}f}"
