# 重建算子层
