"""
Numerical core of sevensins: linear algebra, covariance handling, problem
models, solvers and services.
"""
