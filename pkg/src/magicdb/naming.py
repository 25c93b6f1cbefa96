"""Names of generated predicates.

Generated names contain ``^``, which the parser rejects in user programs, so
they can never collide with user predicates.  Prefix tags mark magic, delta,
view-update and bookkeeping relations; suffixes mark new-state and adorned
versions: ``m^p^bb``, ``dplus^e``, ``p^new^bf``.
"""

from __future__ import annotations

import re

SEP = "^"
MAGIC = "m"
MAGIC_SEED = "ms"
NEW = "new"
DELTA_PLUS = "dplus"
DELTA_MINUS = "dminus"
VU_PLUS = "vplus"
VU_MINUS = "vminus"
NEED_PLUS = "needplus"
NEED_MINUS = "needminus"
EQ = "builtin^eq"
VU_FALSE = "vu^false"

PREFIX_TAGS = {MAGIC, MAGIC_SEED, DELTA_PLUS, DELTA_MINUS, VU_PLUS, VU_MINUS, NEED_PLUS, NEED_MINUS}
_ADORNMENT = re.compile(r"^[bf]+$|^0$")


def adorned(pred: str, adornment: str) -> str:
    return f"{pred}{SEP}{adornment or '0'}"


def magic(adorned_pred: str) -> str:
    return f"{MAGIC}{SEP}{adorned_pred}"


def magic_seed(adorned_pred: str) -> str:
    return f"{MAGIC_SEED}{SEP}{adorned_pred}"


def new_state(pred: str) -> str:
    return f"{pred}{SEP}{NEW}"


def delta(pred: str, sign: str) -> str:
    return f"{DELTA_PLUS if sign == '+' else DELTA_MINUS}{SEP}{pred}"


def vu(pred: str, sign: str) -> str:
    return f"{VU_PLUS if sign == '+' else VU_MINUS}{SEP}{pred}"


def vu_alternative(pred: str, index: int) -> str:
    return f"{VU_PLUS}{SEP}{pred}{SEP}r{index}"


def need(pred: str, sign: str) -> str:
    return f"{NEED_PLUS if sign == '+' else NEED_MINUS}{SEP}{pred}"


def is_reserved(pred: str) -> bool:
    return SEP in pred


def split_tag(pred: str) -> tuple[str | None, str]:
    """``'dplus^p'`` -> ``('dplus', 'p')``; untagged names give ``(None, pred)``."""
    head, _, rest = pred.partition(SEP)
    if rest and head in PREFIX_TAGS:
        return head, rest
    return None, pred


def strip_adornment(pred: str) -> str:
    """Remove a trailing adornment component: ``m^p^new^bf`` -> ``m^p^new``."""
    parts = pred.split(SEP)
    if _has_adornment(parts):
        parts = parts[:-1]
    return SEP.join(parts)


def adornment_of(pred: str) -> str | None:
    parts = pred.split(SEP)
    if _has_adornment(parts):
        return "" if parts[-1] == "0" else parts[-1]
    return None


def _has_adornment(parts: list[str]) -> bool:
    if len(parts) < 2 or not _ADORNMENT.match(parts[-1]):
        return False
    # dplus^b names the delta of predicate b, not an adorned dplus
    return not (len(parts) == 2 and parts[0] in PREFIX_TAGS)


def relation_label(pred: str) -> str:
    """Logical relation used for statistics: adornments dropped."""
    return strip_adornment(pred)
