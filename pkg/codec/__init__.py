# 编解码层：容器格式、编码与解码流水线
