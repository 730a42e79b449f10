"""
数据模型定义 - 运行历史、熵估计与不变量违例
"""
import csv
import json
import sqlite3
from datetime import datetime
from typing import Any, Dict, List, Optional

from utils.log_helpers import log
from utils.path_helpers import prepare_output_path


class Database:
    """SQLite 数据库管理"""

    def __init__(self, db_path: str = "entropy_runs.db"):
        self.db_path = db_path
        self.init_database()

    def get_connection(self):
        """获取数据库连接"""
        return sqlite3.connect(self.db_path)

    def init_database(self):
        """初始化数据库表"""
        conn = self.get_connection()
        cursor = conn.cursor()

        # 运行记录表
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS experiment_runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                label TEXT NOT NULL,
                group_tag TEXT,
                verdict TEXT,
                exit_code INTEGER DEFAULT 0,
                budget TEXT,
                report TEXT,
                created_at DATETIME DEFAULT CURRENT_TIMESTAMP
            )
        """)

        # 熵估计表
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS entropy_estimates (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER,
                label TEXT NOT NULL,
                upper_bound REAL,
                exact REAL,
                method TEXT,
                truncated INTEGER DEFAULT 0,
                flags TEXT,
                FOREIGN KEY (run_id) REFERENCES experiment_runs (id)
            )
        """)

        # 不变量违例表
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS invariant_violations (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER,
                subject TEXT NOT NULL,
                message TEXT,
                detail TEXT,
                timestamp DATETIME DEFAULT CURRENT_TIMESTAMP,
                FOREIGN KEY (run_id) REFERENCES experiment_runs (id)
            )
        """)

        conn.commit()
        conn.close()


def _decode_row(row: sqlite3.Row, json_fields=()) -> Dict[str, Any]:
    record = dict(row)
    for key in json_fields:
        if record.get(key):
            record[key] = json.loads(record[key])
    return record


class RunRecord:
    """运行记录模型"""

    def __init__(self, db: Database):
        self.db = db

    def create(self, command: str, label: str, group_tag: Optional[str] = None,
               verdict: Optional[str] = None, exit_code: int = 0,
               budget: Optional[Dict] = None, report: Optional[Dict] = None) -> int:
        """创建运行记录"""
        conn = self.db.get_connection()
        cursor = conn.cursor()

        cursor.execute("""
            INSERT INTO experiment_runs (command, label, group_tag, verdict, exit_code, budget, report)
            VALUES (?, ?, ?, ?, ?, ?, ?)
        """, (command, label, group_tag, verdict, exit_code,
              json.dumps(budget) if budget else None,
              json.dumps(report, ensure_ascii=False) if report else None))

        run_id = cursor.lastrowid
        conn.commit()
        conn.close()
        return run_id

    def get(self, run_id: int) -> Optional[Dict[str, Any]]:
        """获取运行详情"""
        conn = self.db.get_connection()
        conn.row_factory = sqlite3.Row
        cursor = conn.cursor()

        cursor.execute("SELECT * FROM experiment_runs WHERE id = ?", (run_id,))
        row = cursor.fetchone()
        conn.close()

        return _decode_row(row, ('budget', 'report')) if row else None

    def get_all(self, since: Optional[datetime] = None) -> List[Dict[str, Any]]:
        """获取全部运行（可按起始时间过滤），最新的在前"""
        conn = self.db.get_connection()
        conn.row_factory = sqlite3.Row
        cursor = conn.cursor()

        if since is not None:
            cursor.execute("""
                SELECT * FROM experiment_runs
                WHERE created_at >= ?
                ORDER BY created_at DESC, id DESC
            """, (since.strftime("%Y-%m-%d %H:%M:%S"),))
        else:
            cursor.execute("SELECT * FROM experiment_runs ORDER BY created_at DESC, id DESC")
        rows = cursor.fetchall()
        conn.close()

        return [_decode_row(row, ('budget',)) for row in rows]

    def delete(self, run_id: int):
        """删除运行及其关联记录"""
        conn = self.db.get_connection()
        cursor = conn.cursor()
        cursor.execute("DELETE FROM experiment_runs WHERE id = ?", (run_id,))
        cursor.execute("DELETE FROM entropy_estimates WHERE run_id = ?", (run_id,))
        cursor.execute("DELETE FROM invariant_violations WHERE run_id = ?", (run_id,))
        conn.commit()
        conn.close()

    def export_to_csv(self, output_path: str, since: Optional[datetime] = None) -> str:
        """导出运行列表为CSV（不含完整报告）"""
        runs = self.get_all(since)
        output_path = prepare_output_path(output_path)
        fieldnames = ['id', 'command', 'label', 'group_tag', 'verdict', 'exit_code', 'created_at']

        with open(output_path, 'w', newline='', encoding='utf-8-sig') as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, extrasaction='ignore')
            writer.writeheader()
            writer.writerows(runs)
        return output_path


class EstimateRecord:
    """熵估计模型"""

    def __init__(self, db: Database):
        self.db = db

    def create(self, run_id: int, label: str, upper_bound: float,
               exact: Optional[float] = None, method: Optional[str] = None,
               truncated: bool = False, flags: Optional[List[str]] = None) -> int:
        """记录一次估计"""
        conn = self.db.get_connection()
        cursor = conn.cursor()

        cursor.execute("""
            INSERT INTO entropy_estimates (run_id, label, upper_bound, exact, method, truncated, flags)
            VALUES (?, ?, ?, ?, ?, ?, ?)
        """, (run_id, label, upper_bound, exact, method, int(truncated),
              json.dumps(flags or [], ensure_ascii=False)))

        record_id = cursor.lastrowid
        conn.commit()
        conn.close()
        return record_id

    def create_from(self, run_id: int, estimate) -> int:
        """由 EntropyEstimate 记录"""
        return self.create(run_id, estimate.label, estimate.upper_bound, estimate.exact,
                           estimate.method, estimate.truncated, estimate.flags)

    def get(self, record_id: int) -> Optional[Dict[str, Any]]:
        conn = self.db.get_connection()
        conn.row_factory = sqlite3.Row
        cursor = conn.cursor()

        cursor.execute("SELECT * FROM entropy_estimates WHERE id = ?", (record_id,))
        row = cursor.fetchone()
        conn.close()

        return _decode_row(row, ('flags',)) if row else None

    def get_by_run(self, run_id: int) -> List[Dict[str, Any]]:
        """获取一次运行的全部估计"""
        conn = self.db.get_connection()
        conn.row_factory = sqlite3.Row
        cursor = conn.cursor()

        cursor.execute("SELECT * FROM entropy_estimates WHERE run_id = ? ORDER BY id", (run_id,))
        rows = cursor.fetchall()
        conn.close()

        return [_decode_row(row, ('flags',)) for row in rows]

    def export_to_csv(self, run_id: int, output_path: str) -> str:
        """导出估计为CSV"""
        records = self.get_by_run(run_id)
        output_path = prepare_output_path(output_path)

        with open(output_path, 'w', newline='', encoding='utf-8-sig') as f:
            if records:
                writer = csv.DictWriter(f, fieldnames=records[0].keys())
                writer.writeheader()
                writer.writerows(records)
        return output_path


class ViolationLog:
    """不变量违例日志模型"""

    def __init__(self, db: Database):
        self.db = db

    def create(self, run_id: Optional[int], subject: str, message: str,
               detail: Optional[Any] = None):
        """记录违例"""
        conn = self.db.get_connection()
        cursor = conn.cursor()

        cursor.execute("""
            INSERT INTO invariant_violations (run_id, subject, message, detail)
            VALUES (?, ?, ?, ?)
        """, (run_id, subject, message,
              json.dumps(detail, ensure_ascii=False, default=str) if detail is not None else None))

        conn.commit()
        conn.close()
        log("DB", f"记录不变量违例: {subject}", "✗")

    def get_by_run(self, run_id: int) -> List[Dict[str, Any]]:
        conn = self.db.get_connection()
        conn.row_factory = sqlite3.Row
        cursor = conn.cursor()

        cursor.execute("""
            SELECT * FROM invariant_violations
            WHERE run_id = ?
            ORDER BY timestamp DESC, id DESC
        """, (run_id,))

        rows = cursor.fetchall()
        conn.close()

        return [_decode_row(row, ('detail',)) for row in rows]

    def get_all(self) -> List[Dict[str, Any]]:
        conn = self.db.get_connection()
        conn.row_factory = sqlite3.Row
        cursor = conn.cursor()

        cursor.execute("SELECT * FROM invariant_violations ORDER BY id")
        rows = cursor.fetchall()
        conn.close()

        return [_decode_row(row, ('detail',)) for row in rows]

    def export_to_csv(self, output_path: str) -> str:
        """导出违例日志为CSV"""
        logs = self.get_all()
        output_path = prepare_output_path(output_path)

        with open(output_path, 'w', newline='', encoding='utf-8-sig') as f:
            if logs:
                writer = csv.DictWriter(f, fieldnames=logs[0].keys())
                writer.writeheader()
                for entry in logs:
                    entry = dict(entry)
                    entry['detail'] = json.dumps(entry['detail'], ensure_ascii=False)
                    writer.writerow(entry)
        return output_path
