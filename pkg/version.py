# entropy 命令行的名称与版本（--version 输出）
APP_NAME = "entropy"
APP_VERSION = "0.3.0"
