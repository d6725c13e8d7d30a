# 掩码层：规则网格掩码 + 色调优化
