import json
import os
import sqlite3
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Optional

RECORD_COLUMNS = (
    "replicate",
    "layout",
    "modality",
    "molecule",
    "order_position",
    "modality_position",
    "e_first",
    "e_last",
    "e_ext",
    "reference",
    "dev_first",
    "dev_last",
    "dev_ext",
    "discarded_fraction",
)


def _app_root_dir() -> str:
    if getattr(sys, "frozen", False):
        return os.path.dirname(sys.executable)
    return os.path.dirname(os.path.abspath(os.path.join(__file__, os.pardir)))


def _data_dir() -> str:
    root = _app_root_dir()
    data_path = os.path.join(root, "data")
    os.makedirs(data_path, exist_ok=True)
    return data_path


def _db_path() -> str:
    # SQD_RESULTS_DB pozwala testom i skryptom użyć innego pliku
    return os.environ.get("SQD_RESULTS_DB") or os.path.join(_data_dir(), "results.db")


def _connect() -> sqlite3.Connection:
    conn = sqlite3.connect(_db_path())
    conn.row_factory = sqlite3.Row
    conn.execute("PRAGMA foreign_keys = ON;")
    return conn


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def init_db() -> None:
    conn = _connect()
    try:
        cur = conn.cursor()
        # PRAGMA user_version for simple schema versioning
        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS meta (
                id INTEGER PRIMARY KEY CHECK (id = 1),
                user_version INTEGER NOT NULL DEFAULT 1
            );
            """
        )
        cur.execute("INSERT OR IGNORE INTO meta(id, user_version) VALUES(1, 1);")

        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                name TEXT,
                spec_path TEXT,
                master_seed TEXT,
                replicates INTEGER,
                shots INTEGER,
                config_json TEXT,
                created_at TEXT NOT NULL
            );
            """
        )

        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS records (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL,
                replicate INTEGER NOT NULL,
                layout TEXT NOT NULL,
                modality TEXT NOT NULL,
                molecule TEXT NOT NULL,
                order_position INTEGER,
                modality_position INTEGER,
                e_first REAL NOT NULL,
                e_last REAL NOT NULL,
                e_ext REAL NOT NULL,
                reference REAL NOT NULL,
                dev_first REAL NOT NULL,
                dev_last REAL NOT NULL,
                dev_ext REAL NOT NULL,
                discarded_fraction REAL,
                FOREIGN KEY(run_id) REFERENCES runs(id) ON DELETE CASCADE
            );
            """
        )
        conn.commit()
    finally:
        conn.close()


def save_run(
    records: Iterable[Any],
    name: Optional[str] = None,
    spec_path: Optional[str] = None,
    master_seed: Optional[int] = None,
    replicates: Optional[int] = None,
    shots: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None,
) -> int:
    """Zapisuje przebieg RBD z rekordami i zwraca jego id."""
    init_db()
    conn = _connect()
    try:
        cur = conn.cursor()
        cur.execute(
            """
            INSERT INTO runs(name, spec_path, master_seed, replicates, shots, config_json, created_at)
            VALUES(?,?,?,?,?,?,?)
            """,
            (
                name,
                spec_path,
                # ziarno może przekraczać 64-bitowy INTEGER sqlite
                None if master_seed is None else str(master_seed),
                replicates,
                shots,
                json.dumps(config, sort_keys=True) if config is not None else None,
                _now(),
            ),
        )
        run_id = int(cur.lastrowid)
        placeholders = ",".join("?" * (len(RECORD_COLUMNS) + 1))
        for record in records:
            row = record.to_dict() if hasattr(record, "to_dict") else dict(record)
            cur.execute(
                f"INSERT INTO records(run_id, {', '.join(RECORD_COLUMNS)}) VALUES({placeholders})",
                (run_id, *(row.get(column) for column in RECORD_COLUMNS)),
            )
        conn.commit()
        return run_id
    finally:
        conn.close()


def list_runs(limit: int = 50, offset: int = 0) -> List[Dict[str, Any]]:
    init_db()
    conn = _connect()
    try:
        cur = conn.cursor()
        cur.execute(
            """
            SELECT r.id, r.name, r.spec_path, r.master_seed, r.replicates, r.shots, r.created_at,
                   COUNT(rec.id) AS n_records
            FROM runs r
            LEFT JOIN records rec ON rec.run_id = r.id
            GROUP BY r.id
            ORDER BY r.id DESC
            LIMIT ? OFFSET ?
            """,
            (limit, offset),
        )
        return [dict(row) for row in cur.fetchall()]
    finally:
        conn.close()


def get_run_records(run_id: int) -> List[Dict[str, Any]]:
    init_db()
    conn = _connect()
    try:
        cur = conn.cursor()
        cur.execute(
            f"SELECT {', '.join(RECORD_COLUMNS)} FROM records WHERE run_id=? ORDER BY id",
            (run_id,),
        )
        return [dict(row) for row in cur.fetchall()]
    finally:
        conn.close()


def get_run(run_id: int) -> Dict[str, Any]:
    init_db()
    conn = _connect()
    try:
        cur = conn.cursor()
        cur.execute("SELECT * FROM runs WHERE id=?", (run_id,))
        row = cur.fetchone()
        if not row:
            return {}
        run = dict(row)
        if run.get("config_json"):
            try:
                run["config_json"] = json.loads(run["config_json"])
            except json.JSONDecodeError:
                pass
        return run
    finally:
        conn.close()


def delete_run(run_id: int) -> bool:
    """Usuwa przebieg razem z jego rekordami."""
    init_db()
    conn = _connect()
    try:
        cur = conn.cursor()
        cur.execute("DELETE FROM records WHERE run_id=?", (run_id,))
        cur.execute("DELETE FROM runs WHERE id=?", (run_id,))
        conn.commit()
        return cur.rowcount > 0
    finally:
        conn.close()


def clear_results() -> None:
    """Czyści całą bazę wyników"""
    init_db()
    conn = _connect()
    try:
        cur = conn.cursor()
        cur.execute("DELETE FROM records")
        cur.execute("DELETE FROM runs")
        cur.execute("DELETE FROM meta")
        # Reset SQLite sequence to start from 1 again
        cur.execute("DELETE FROM sqlite_sequence WHERE name IN ('runs', 'records')")
        conn.commit()
    finally:
        conn.close()
