# 命令行层
