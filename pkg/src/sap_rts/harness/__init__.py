"""Agents, the match loop, tournaments, experiments and report tables."""
