"""CSV and config-file plumbing for the CLI and campaigns."""
from __future__ import annotations

import configparser
import csv
import os
from typing import Iterable, Mapping, Optional

CSV_SCHEMA = 1


def write_csv(path_or_buf, fieldnames, rows: Iterable[Mapping]) -> None:
    """CSV with a leading '#schema=N' comment line for downstream plotting."""
    own = isinstance(path_or_buf, (str, os.PathLike))
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        fh.write(f"#schema={CSV_SCHEMA}\n")
        w = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    finally:
        if own:
            fh.close()


def read_config(path: str, section: str = "campaign") -> dict:
    """Flat key=value config with bracketed section headers."""
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_string(fh.read())
    if section not in cp:
        raise KeyError(f"missing [{section}] section in {path}")
    return dict(cp[section])


def ensure_outdir(out: Optional[str]) -> Optional[str]:
    if out is None:
        return None
    os.makedirs(out, exist_ok=True)
    return out
