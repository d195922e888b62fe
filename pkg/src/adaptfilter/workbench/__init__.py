"""Workloads, measurement harness and benchmark CLI."""
