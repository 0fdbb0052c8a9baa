"""SQLite ledger of scenario runs and learning curves."""

from __future__ import annotations

import sqlite3
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import pandas as pd

from hev_energy_lab.harness.state import MetricsReport, RunConfig

UTC = timezone.utc


def utc_now_iso() -> str:
    return datetime.now(UTC).isoformat()


class ResultsStore:
    def __init__(self, db_path: str | Path) -> None:
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._initialize_schema()

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(str(self.db_path))
        conn.row_factory = sqlite3.Row
        return conn

    @contextmanager
    def _connection(self):
        conn = self._connect()
        try:
            yield conn
            conn.commit()
        finally:
            conn.close()

    def _initialize_schema(self) -> None:
        schema_path = Path(__file__).with_name("schema.sql")
        schema_sql = schema_path.read_text(encoding="utf-8")
        with self._connection() as conn:
            conn.executescript(schema_sql)

    def record_run(self, config: RunConfig, report: MetricsReport) -> int:
        """Summary metrics only; per-step traces belong in exported files."""

        with self._connection() as conn:
            cursor = conn.execute(
                """
                INSERT INTO scenario_runs(
                    config_hash, strategy, cycle, seed, final_soc_pct, fuel_l, fuel_economy,
                    corrected_fuel_economy, start_stop_count, terminated, config_json, created_at
                )
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    config.config_hash(),
                    report.strategy.value,
                    report.cycle,
                    report.seed,
                    report.final_soc_pct,
                    report.fuel_l,
                    report.fuel_economy,
                    report.corrected_fuel_economy,
                    report.start_stop_count,
                    int(report.terminated),
                    config.model_dump_json(),
                    utc_now_iso(),
                ),
            )
            return int(cursor.lastrowid)

    def record_learning_curve(self, run_id: int, curve: pd.DataFrame) -> int:
        rows = [
            (run_id, int(row.episode), float(row["return"]), float(row.fuel), float(row.final_soc))
            for _, row in curve.iterrows()
        ]
        with self._connection() as conn:
            conn.executemany(
                """
                INSERT INTO learning_curves(run_id, episode, episode_return, fuel_l, final_soc)
                VALUES (?, ?, ?, ?, ?)
                ON CONFLICT(run_id, episode) DO UPDATE SET
                    episode_return = excluded.episode_return,
                    fuel_l = excluded.fuel_l,
                    final_soc = excluded.final_soc
                """,
                rows,
            )
        return len(rows)

    def list_runs(self, strategy: str | None = None) -> list[dict[str, Any]]:
        query = "SELECT * FROM scenario_runs"
        params: tuple[Any, ...] = ()
        if strategy is not None:
            query += " WHERE strategy = ?"
            params = (strategy,)
        with self._connection() as conn:
            rows = conn.execute(query + " ORDER BY run_id", params).fetchall()
        return [dict(row) for row in rows]

    def runs_for_config(self, config: RunConfig) -> list[dict[str, Any]]:
        with self._connection() as conn:
            rows = conn.execute(
                "SELECT * FROM scenario_runs WHERE config_hash = ? ORDER BY run_id",
                (config.config_hash(),),
            ).fetchall()
        return [dict(row) for row in rows]

    def get_learning_curve(self, run_id: int) -> pd.DataFrame:
        with self._connection() as conn:
            rows = conn.execute(
                """
                SELECT episode, episode_return AS "return", fuel_l AS fuel, final_soc
                FROM learning_curves WHERE run_id = ? ORDER BY episode
                """,
                (run_id,),
            ).fetchall()
        return pd.DataFrame([dict(row) for row in rows], columns=["episode", "return", "fuel", "final_soc"])
