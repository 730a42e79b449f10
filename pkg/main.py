"""
应用入口 - entropy 命令行

退出码: 0 成功；2 用法错误；3 预算截断；4 检测到不变量违例
"""
import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

from dateutil import parser as date_parser

from core.at_harness import (VERDICT_VIOLATION, ATExperiment, ATReport, default_roster,
                             run_at_experiment, run_catalog_suite)
from core.dynamics import endo_from_spec, parse_endo_text
from core.entropy import BudgetPolicy, EntropyEstimate, entropy_H, entropy_H_linear, entropy_h
from core.errors import BudgetExceededError, EntropyToolError, UsageError
from core.examples import list_examples, run_example
from core.group_core import FiniteSubset, generate_payloads
from core.groups_catalog import GroupSpec, build_group, catalog_entry, subgroup_chain
from core.permutability import (export_matrix_csv, first_nonpermuting_pair, permutability_matrix,
                                sfin_noncofinal_witness, subgroup_enumerate)
from core.settings import load_settings
from database.models import Database, EstimateRecord, RunRecord, ViolationLog
from utils.log_helpers import log, set_quiet
from utils.path_helpers import prepare_output_path
from version import APP_NAME, APP_VERSION

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TRUNCATED = 3
EXIT_VIOLATION = 4


def _read_json_arg(text: str) -> Any:
    """参数可以是 JSON 文本或 JSON 文件路径"""
    if os.path.exists(text):
        try:
            with open(text, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, ValueError) as e:
            raise UsageError(f"无法读取 JSON 文件 {text}: {e}")
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"既不是文件也不是 JSON: {text}")


def load_group_spec(text: str) -> GroupSpec:
    """GroupSpec 文件、JSON 文本或目录名称"""
    if os.path.exists(text) or text.lstrip().startswith("{"):
        return GroupSpec.from_json(_read_json_arg(text))
    return catalog_entry(text).spec


def build_budget(args, settings: Dict[str, Any]) -> BudgetPolicy:
    budget = BudgetPolicy.from_settings(settings)
    if getattr(args, "budget", None):
        budget = BudgetPolicy.from_json(_read_json_arg(args.budget), budget)
    overrides = {"max_exponent": getattr(args, "max_exp", None),
                 "max_members": getattr(args, "max_members", None),
                 "time_cap": getattr(args, "time_cap", None)}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        budget = BudgetPolicy.from_json(overrides, budget)
    return budget


def _write_json(data: Dict[str, Any], path: Optional[str]):
    if path:
        path = prepare_output_path(path)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, ensure_ascii=False, indent=2)
        log("CLI", f"已写入 {path}", "✓")
    else:
        print(json.dumps(data, ensure_ascii=False, indent=2))


def _record(args, command: str, label: str, group_tag: Optional[str], verdict: Optional[str],
            exit_code: int, budget: Optional[BudgetPolicy], report: Dict[str, Any],
            estimates: List[EntropyEstimate] = ()):
    """写入运行历史（record_runs 关闭或 --no-record 时跳过）"""
    settings = args.settings_data
    if args.no_record or not settings.get('record_runs', True):
        return
    try:
        db = Database(settings['db_path'])
        run_id = RunRecord(db).create(command, label, group_tag, verdict, exit_code,
                                      budget.to_json() if budget else None, report)
        estimate_model = EstimateRecord(db)
        violations = ViolationLog(db)
        for est in estimates:
            estimate_model.create_from(run_id, est)
            if est.invariant_violation:
                violations.create(run_id, est.label, "ℓ(T_2^n)/2^n 序列不单调",
                                  {"sequence": est.sequence})
        if verdict == VERDICT_VIOLATION:
            violations.create(run_id, label, "精确值不满足加法定理", report.get("difference"))
    except Exception as e:
        log("DB", f"记录运行失败: {e}", "⚠")


def _estimate_exit(estimate: EntropyEstimate) -> int:
    if estimate.invariant_violation:
        return EXIT_VIOLATION
    if estimate.truncated:
        return EXIT_TRUNCATED
    return EXIT_OK


def _select_set(group, text: str, budget: BudgetPolicy) -> Optional[FiniteSubset]:
    """
    --set 的取值

    family（返回 None，表示扫描子群链）；member:<i>（子群链第 i 个成员）；
    gens:<JSON 列表>（生成的子群）；其余为元素列表的 JSON 文本或文件
    """
    if text == "family":
        return None
    if text.startswith("member:"):
        raw = text.split(":", 1)[1]
        try:
            index = int(raw)
        except ValueError:
            raise UsageError(f"member: 后面应为整数: {raw!r}")
        for i, member in enumerate(subgroup_chain(group, budget.family_size_bound)):
            if i == index:
                return member
        raise UsageError(f"子群链没有第 {index} 个成员")
    if text.startswith("gens:"):
        gens = [group.decode(v) for v in _read_json_arg(text.split(":", 1)[1])]
        return generate_payloads(group, gens, max_size=budget.max_set_size)
    values = _read_json_arg(text)
    if not isinstance(values, list):
        raise UsageError("显式集合必须是元素列表")
    return FiniteSubset(group, [group.decode(v) for v in values])


def cmd_compute(args) -> int:
    budget = build_budget(args, args.settings_data)
    spec = load_group_spec(args.group)
    group = build_group(spec)
    phi = endo_from_spec(group, parse_endo_text(args.endo))
    X = _select_set(group, args.set, budget)
    if X is None:
        estimate = entropy_h(phi, subgroup_chain(group, budget.family_size_bound), budget,
                             f"h({phi.name}) on {group.tag}", cofinal=group.is_finite)
    elif args.scheme == "linear":
        estimate = entropy_H_linear(phi, X, budget)
    else:
        estimate = entropy_H(phi, X, budget)

    report = estimate.to_json()
    report["group"] = spec.to_json()
    _write_json(report, args.json)
    if args.csv:
        estimate.to_csv(args.csv)
    code = _estimate_exit(estimate)
    _record(args, "compute", estimate.label, group.tag, None, code, budget, report, [estimate])
    return code


def _report_exit(report: ATReport) -> int:
    if report.verdict == VERDICT_VIOLATION or report.sequence_violation:
        return EXIT_VIOLATION
    if report.truncated:
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_at_verify(args) -> int:
    budget = build_budget(args, args.settings_data)
    exp = ATExperiment.from_json(_read_json_arg(args.experiment), budget)
    report = run_at_experiment(exp, args.settings_data.get('at_tolerance', 1e-9))
    data = report.to_json()
    _write_json(data, args.json)
    code = _report_exit(report)
    _record(args, "at-verify", report.label, exp.group.tag(), report.verdict, code, exp.budget,
            data, [report.h_G, report.h_H, report.h_Q])
    return code


def cmd_suite(args) -> int:
    if args.roster != "default":
        raise UsageError(f"未知的实验名单: {args.roster}")
    budget = build_budget(args, args.settings_data)
    reports = run_catalog_suite(budget, default_roster(budget))
    data = {"schema": "at_suite.v1", "roster": args.roster,
            "reports": [r.to_json() for r in reports]}
    _write_json(data, args.json)
    code = EXIT_OK
    for report in reports:
        if report.negative_control:
            continue
        code = max(code, _report_exit(report))
        print(f"{report.verdict:32s} {report.label}", file=sys.stderr)
    for report in reports:
        _record(args, "suite", report.label, None, report.verdict, _report_exit(report), budget,
                report.to_json(), [report.h_G, report.h_H, report.h_Q])
    return code


def cmd_permute(args) -> int:
    if args.witness:
        n, m = args.witness
        result = sfin_noncofinal_witness(n, m)
        data = result.to_json()
        _write_json(data, args.json)
        _record(args, "permute", f"Sfin witness ({n},{m})", "S_fin", None, EXIT_OK, None, data)
        return EXIT_OK
    if not args.group:
        raise UsageError("permute 需要 --group 或 --witness")
    settings = args.settings_data
    group = build_group(load_group_spec(args.group))
    if not args.enumerate:
        raise UsageError("当前只支持 --enumerate（有限群的全部子群）")
    subgroups = subgroup_enumerate(group, settings.get('coset_materialize_limit', 4096))
    matrix = permutability_matrix(subgroups, settings.get('workers', 3))
    pair = first_nonpermuting_pair(subgroups)
    data = {
        "group": group.tag,
        "subgroups": [{"order": len(S),
                       "generators": [group.format(g) for g in (S.generators or ())]} for S in subgroups],
        "all_permutable": pair is None,
        "nonpermuting_pair": list(pair.pair) if pair else None,
        "witness": pair.witness if pair else None,
        "witness_side": pair.witness_side if pair else None,
    }
    if args.csv:
        export_matrix_csv(matrix, subgroups, args.csv)
    _write_json(data, args.json)
    _record(args, "permute", f"subgroups of {group.tag}", group.tag, None, EXIT_OK, None, data)
    return EXIT_OK


def cmd_examples(args) -> int:
    if args.action == "list":
        for item in list_examples():
            print(f"{item['name']:14s} {item['description']}")
        return EXIT_OK
    if not args.name:
        raise UsageError("examples run 需要例子名称")
    budget = build_budget(args, args.settings_data)
    data = run_example(args.name, budget)
    _write_json(data, args.json)
    _record(args, "examples", args.name, None, data.get("verdict"), EXIT_OK, budget, data)
    return EXIT_OK


def cmd_history(args) -> int:
    db = Database(args.settings_data['db_path'])
    runs = RunRecord(db)
    since = None
    if args.since:
        try:
            since = date_parser.parse(args.since)
        except (ValueError, OverflowError) as e:
            raise UsageError(f"无法解析日期 {args.since}: {e}")
    if args.csv:
        runs.export_to_csv(args.csv, since)
        log("CLI", f"已导出 {args.csv}", "✓")
        return EXIT_OK
    for run in runs.get_all(since):
        verdict = run['verdict'] or '-'
        print(f"#{run['id']:<5d} {run['created_at']}  {run['command']:10s} {verdict:28s} "
              f"exit={run['exit_code']}  {run['label']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description="群自同态的代数熵与加法定理实验")
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    parser.add_argument("--settings", default=None, help="设置文件（默认 config/app_settings.json）")
    parser.add_argument("--quiet", action="store_true", help="关闭控制台日志")
    parser.add_argument("--no-record", action="store_true", help="不写入运行历史")
    sub = parser.add_subparsers(dest="command", required=True)

    def budget_args(p):
        p.add_argument("--budget", help="BudgetPolicy JSON 文件或文本")
        p.add_argument("--max-exp", type=int, dest="max_exp", help="2^n 序列的最大 n")
        p.add_argument("--max-members", type=int, dest="max_members")
        p.add_argument("--time-cap", type=float, dest="time_cap")
        p.add_argument("--json", help="把结果写入 JSON 文件（默认打印）")

    p = sub.add_parser("compute", help="计算 H(φ,X) 或 h(φ)")
    p.add_argument("--group", required=True, help="GroupSpec 文件/JSON 或目录名称")
    p.add_argument("--endo", required=True, help="自同态说明（JSON、文件或简写）")
    p.add_argument("--set", default="family", help="family | member:<i> | gens:<JSON> | 元素列表")
    p.add_argument("--scheme", choices=("doubling", "linear"), default="doubling")
    p.add_argument("--csv", help="导出 (n, value) 表")
    budget_args(p)
    p.set_defaults(handler=cmd_compute)

    p = sub.add_parser("at-verify", help="运行一个加法定理实验")
    p.add_argument("--experiment", required=True, help="ATExperiment JSON 文件")
    budget_args(p)
    p.set_defaults(handler=cmd_at_verify)

    p = sub.add_parser("suite", help="运行固定实验名单")
    p.add_argument("--roster", default="default")
    budget_args(p)
    p.set_defaults(handler=cmd_suite)

    p = sub.add_parser("permute", help="子群可置换性")
    p.add_argument("--group", help="GroupSpec 文件/JSON 或目录名称")
    p.add_argument("--enumerate", action="store_true", help="枚举全部子群并比较每一对")
    p.add_argument("--witness", type=int, nargs=2, metavar=("N", "M"),
                   help="𝒮_fin 中 𝒮_M 与 ⟨(N M+1)⟩ 的不可置换见证")
    p.add_argument("--csv", help="导出可置换矩阵")
    p.add_argument("--json")
    p.set_defaults(handler=cmd_permute)

    p = sub.add_parser("examples", help="列出或运行命名例子")
    p.add_argument("action", choices=("list", "run"))
    p.add_argument("name", nargs="?")
    budget_args(p)
    p.set_defaults(handler=cmd_examples)

    p = sub.add_parser("history", help="查看运行历史")
    p.add_argument("--since", help="起始时间（任意常见日期格式）")
    p.add_argument("--csv", help="导出为 CSV")
    p.set_defaults(handler=cmd_history)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    parser = build_parser()
    args = parser.parse_args(argv)
    set_quiet(args.quiet)
    args.settings_data = load_settings(args.settings)
    try:
        return args.handler(args)
    except BudgetExceededError as e:
        log("CLI", f"预算耗尽: {e}", "⚠")
        return e.exit_code
    except EntropyToolError as e:
        log("CLI", f"{type(e).__name__}: {e}", "✗")
        print(f"错误: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
