# 熵编码层
