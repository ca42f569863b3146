"""
Trust edge lists: CSV rows of `from,to,kind`, header optional.
"""
import io
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

from core.epinet import Epinet
from core.errors import ParseError
from core.models import TrustEdge, TrustKind, id_key
from core.trust import set_trust

logger = logging.getLogger(__name__)

COLUMNS = ["from", "to", "kind"]


def read_edge_list(source: Union[str, Path, io.StringIO]) -> pd.DataFrame:
    """Load an edge list into a frame with columns from, to, kind."""
    try:
        frame = pd.read_csv(source, header=None, dtype=str, skipinitialspace=True, comment="#")
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=COLUMNS)
    if frame.shape[1] != 3:
        raise ParseError(f"edge list needs 3 columns, found {frame.shape[1]}")
    frame.columns = COLUMNS
    first = [str(v).strip().lower() for v in frame.iloc[0]] if len(frame) else []
    header = first == COLUMNS
    if header:
        frame = frame.iloc[1:].reset_index(drop=True)
    frame = frame.apply(lambda col: col.str.strip())
    kinds = {k.value for k in TrustKind}
    bad = frame[~frame["kind"].isin(kinds)]
    if not bad.empty:
        row = int(bad.index[0]) + (2 if header else 1)
        raise ParseError(
            f"unknown trust kind {bad.iloc[0]['kind']!r}", line=row, expected=sorted(kinds)
        )
    return frame


def import_edges(
    net: Epinet,
    source: Union[str, Path, io.StringIO],
    names: Optional[Dict[str, str]] = None,
) -> int:
    """Declare every edge of the list; `names` maps display names to ids.
    Returns the number of rows applied."""
    frame = read_edge_list(source)
    resolve = (lambda n: names.get(n, n)) if names else (lambda n: n)
    for row in frame.itertuples(index=False):
        set_trust(net, resolve(row[0]), resolve(row[1]), row[2])
    logger.info("imported %d trust edge(s)", len(frame))
    return len(frame)


def edges_frame(net: Epinet) -> pd.DataFrame:
    """Trust edges as a table sorted by endpoints and kind."""
    edges: List[TrustEdge] = sorted(
        net.trust.values(),
        key=lambda e: (id_key(e.source), id_key(e.target), e.kind.value),
    )
    return pd.DataFrame(
        [
            {"from": e.source, "to": e.target, "kind": e.kind.value, "origin": e.origin.value}
            for e in edges
        ],
        columns=COLUMNS + ["origin"],
    )
