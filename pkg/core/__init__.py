# 群、自同态、熵估计与加法定理实验
