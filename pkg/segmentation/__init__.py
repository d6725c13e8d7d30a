# 分割层：Mumford-Shah 区域合并
