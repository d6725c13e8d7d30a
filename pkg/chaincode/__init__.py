# 链码层：分割边界的裂缝边序列化
