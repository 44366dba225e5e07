"""Scaling algorithms for matrices, operators and tensors, with null-cone and Brascamp-Lieb applications"""
