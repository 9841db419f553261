"""
Record store for Monte Carlo runs.

Single responsibility: encapsulates all database access logic.
Uses aiosqlite with raw SQL; per-instance records are stored as JSON so
the figures can be rebuilt later without re-simulating.

Public API:
- init_db(db_path: str) -> None
- save_run(db_path: str, label: str, position: int, config_json: str) -> int
- save_records(db_path: str, run_id: int, records: list[InstanceRecord]) -> None
- fetch_runs(db_path: str) -> list[dict]
- fetch_records(db_path: str, run_id: int) -> list[InstanceRecord]
- fetch_latest_batch(db_path: str) -> list[dict]
"""

import json
import logging
import os

import aiosqlite

from noma_ca.core.errors import DuplicateRecordError
from noma_ca.simulation.montecarlo import InstanceRecord

logger = logging.getLogger(__name__)


async def init_db(db_path: str) -> None:
    """Initialize DB schema if needed.

    This function is idempotent and safe to call on every run.

    Args:
        db_path: Path to SQLite database file.
    """
    directory = os.path.dirname(db_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    existed = os.path.exists(db_path)

    async with aiosqlite.connect(db_path) as db:
        await db.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                label TEXT NOT NULL,
                position INTEGER NOT NULL,
                config_json TEXT NOT NULL,
                created_at DATETIME DEFAULT CURRENT_TIMESTAMP
            )
        """)

        await db.execute("""
            CREATE TABLE IF NOT EXISTS records (
                run_id INTEGER NOT NULL REFERENCES runs(id),
                instance_index INTEGER NOT NULL,
                noise_w REAL NOT NULL,
                record_json TEXT NOT NULL,
                PRIMARY KEY (run_id, instance_index, noise_w)
            )
        """)
        await db.commit()
    logger.info('Record store initialized: %s', db_path)
    if existed:
        logger.warning('Reusing existing record store %s; new runs are appended', db_path)


async def save_run(db_path: str, label: str, position: int, config_json: str) -> int:
    """Register a run and return its ID.

    Args:
        db_path: Path to SQLite database file.
        label: Weights case the run covers.
        position: Index of the case within its invocation; 0 marks the primary case.
        config_json: JSON dump of the experiment config.

    Returns:
        Integer ID of the new run.
    """
    async with aiosqlite.connect(db_path) as db:
        cursor = await db.execute(
            "INSERT INTO runs (label, position, config_json) VALUES (?, ?, ?)",
            (label, position, config_json)
        )
        await db.commit()
        run_id = cursor.lastrowid
        return run_id if run_id is not None else 0


async def save_records(db_path: str, run_id: int, records: list[InstanceRecord]) -> None:
    """Persist per-instance records of a run.

    Raises:
        DuplicateRecordError: If a record for the same (instance, noise) already exists in the run.
    """
    rows = [
        (run_id, r.instance_index, r.noise_w, json.dumps(r.to_dict()))
        for r in records
    ]
    async with aiosqlite.connect(db_path) as db:
        try:
            await db.executemany(
                "INSERT INTO records (run_id, instance_index, noise_w, record_json) VALUES (?, ?, ?, ?)",
                rows
            )
        except aiosqlite.IntegrityError:
            raise DuplicateRecordError()
        await db.commit()


async def fetch_runs(db_path: str) -> list[dict]:
    """Return stored runs, oldest first.

    Returns:
        List of dictionaries with keys: id, label, position, config_json, created_at, n_records.
    """
    async with aiosqlite.connect(db_path) as db:
        db.row_factory = aiosqlite.Row
        async with db.execute("""
            SELECT runs.id, runs.label, runs.position, runs.config_json, runs.created_at, count(records.run_id) AS n_records
            FROM runs LEFT JOIN records ON records.run_id = runs.id
            GROUP BY runs.id ORDER BY runs.id
        """) as cur:
            rows = await cur.fetchall()
            return [dict(r) for r in rows]


async def fetch_records(db_path: str, run_id: int) -> list[InstanceRecord]:
    """Records of one run ordered by (instance_index, noise_w)."""
    async with aiosqlite.connect(db_path) as db:
        async with db.execute(
            "SELECT record_json FROM records WHERE run_id = ? ORDER BY instance_index, noise_w",
            (run_id,)
        ) as cur:
            rows = await cur.fetchall()
    return [InstanceRecord.from_dict(json.loads(row[0])) for row in rows]


async def fetch_latest_batch(db_path: str) -> list[dict]:
    """Runs written by the most recent simulate invocation, primary case first.

    Returns:
        Run dictionaries as in fetch_runs; empty if the store holds no runs.
    """
    runs = await fetch_runs(db_path)
    starts = [i for i, run in enumerate(runs) if run['position'] == 0]
    if not starts:
        return []
    return runs[starts[-1]:]
