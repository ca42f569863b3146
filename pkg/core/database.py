"""
SQLite run ledger: every recorded scenario run with its report, the
primitive events it applied and its final snapshot.
"""
import json
import logging
import sqlite3
import uuid
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Iterator, List, Optional, Union

from .models import Event, RunRecord

logger = logging.getLogger(__name__)

DATABASE_PATH = Path("data/epinet.db")

PathLike = Union[str, Path]


def init_database(path: Optional[PathLike] = None) -> None:
    """Initialize the SQLite database with required tables."""
    target = Path(path) if path is not None else DATABASE_PATH
    target.parent.mkdir(parents=True, exist_ok=True)

    with get_connection(target) as conn:
        cursor = conn.cursor()

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id TEXT PRIMARY KEY,
                scenario TEXT NOT NULL,
                digest TEXT NOT NULL,
                created_at TIMESTAMP NOT NULL,
                report TEXT NOT NULL
            )
        """)

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS run_events (
                run_id TEXT NOT NULL,
                seq INTEGER NOT NULL,
                event TEXT NOT NULL,
                PRIMARY KEY (run_id, seq),
                FOREIGN KEY (run_id) REFERENCES runs (id)
            )
        """)

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS run_snapshots (
                run_id TEXT PRIMARY KEY,
                snapshot TEXT NOT NULL,
                FOREIGN KEY (run_id) REFERENCES runs (id)
            )
        """)

        cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_digest ON runs(digest)")
        cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_created ON runs(created_at)")

        conn.commit()


@contextmanager
def get_connection(path: Optional[PathLike] = None) -> Iterator[sqlite3.Connection]:
    """Get database connection with proper context management."""
    conn = sqlite3.connect(Path(path) if path is not None else DATABASE_PATH)
    conn.row_factory = sqlite3.Row
    try:
        yield conn
    finally:
        conn.close()


def _row_to_run(row: sqlite3.Row) -> RunRecord:
    return RunRecord(
        id=row["id"],
        scenario=row["scenario"],
        digest=row["digest"],
        created_at=datetime.fromisoformat(row["created_at"]),
        report=json.loads(row["report"]),
    )


class DatabaseManager:
    """Reads and writes recorded runs."""

    def __init__(self, path: Optional[PathLike] = None):
        self.path = Path(path) if path is not None else None

    def _connect(self):  # type: ignore[no-untyped-def]
        return get_connection(self.path)

    def record_run(
        self,
        scenario: str,
        digest: str,
        report: bytes,
        events: List[Event],
        snapshot: bytes,
    ) -> str:
        """Store a finished run; returns its id."""
        run_id = uuid.uuid4().hex
        with self._connect() as conn:
            cursor = conn.cursor()
            cursor.execute(
                """
                INSERT INTO runs (id, scenario, digest, created_at, report)
                VALUES (?, ?, ?, ?, ?)
                """,
                (run_id, scenario, digest, datetime.now().isoformat(), report.decode("utf-8")),
            )
            cursor.executemany(
                "INSERT INTO run_events (run_id, seq, event) VALUES (?, ?, ?)",
                [
                    (run_id, seq, event.model_dump_json(by_alias=True))
                    for seq, event in enumerate(events, start=1)
                ],
            )
            cursor.execute(
                "INSERT INTO run_snapshots (run_id, snapshot) VALUES (?, ?)",
                (run_id, snapshot.decode("utf-8")),
            )
            conn.commit()
        logger.info("recorded run %s (%s, %d events)", run_id, scenario, len(events))
        return run_id

    def get_run(self, run_id: str) -> Optional[RunRecord]:
        """Get run by ID."""
        with self._connect() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM runs WHERE id = ?", (run_id,))
            row = cursor.fetchone()
            return _row_to_run(row) if row else None

    def get_recent_runs(self, limit: int = 20) -> List[RunRecord]:
        """Most recent runs first."""
        with self._connect() as conn:
            cursor = conn.cursor()
            cursor.execute(
                "SELECT * FROM runs ORDER BY created_at DESC, rowid DESC LIMIT ?", (limit,)
            )
            return [_row_to_run(row) for row in cursor.fetchall()]

    def get_run_events(self, run_id: str) -> List[Event]:
        with self._connect() as conn:
            cursor = conn.cursor()
            cursor.execute(
                "SELECT event FROM run_events WHERE run_id = ? ORDER BY seq", (run_id,)
            )
            return [Event.model_validate_json(row["event"]) for row in cursor.fetchall()]

    def get_snapshot(self, run_id: str) -> Optional[bytes]:
        with self._connect() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT snapshot FROM run_snapshots WHERE run_id = ?", (run_id,))
            row = cursor.fetchone()
            return row["snapshot"].encode("utf-8") if row else None


# Global database manager instance
db = DatabaseManager()
