KEEP = "keep"
GAP = "gap"

_KEEP_TOKENS = {"keep", "retained", "retain", "k", "1", "true"}
_GAP_TOKENS = {"gap", "deleted", "delete", "g", "0", "false"}


def normalize_slot(token) -> str:
    """Normalize a gap-pattern token to 'keep' or 'gap'."""
    if isinstance(token, bool):
        return KEEP if token else GAP
    t = str(token).strip().lower()
    if t in _KEEP_TOKENS:
        return KEEP
    if t in _GAP_TOKENS:
        return GAP
    raise ValueError(f"Unknown gap pattern token: '{token}'. Use keep/gap")


def parse_pattern(text: str) -> list[str]:
    """'keep,gap,keep' or 'KGK' -> ['keep', 'gap', 'keep']"""
    text = text.strip()
    if "," in text:
        return [normalize_slot(t) for t in text.split(",") if t.strip()]
    return [normalize_slot(c) for c in text]
