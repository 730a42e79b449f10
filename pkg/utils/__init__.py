# 日志与输出路径工具
