"""Polynomial extrapolation (TG-MPE / TG-RRE) for sequences of tensors."""
