# 运行历史（SQLite）
from database.models import Database, EstimateRecord, RunRecord, ViolationLog
