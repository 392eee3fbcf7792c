"""Strategy-aware planning for a small two-player real-time strategy game.

Modules: ``engine`` (rules), ``actions`` (abstract actions and their executor),
``strategy`` (strategy space), ``planner`` (strategy-conditioned planning),
``sen`` (strategy evaluation network), ``recognition`` (trajectory summaries
and opponent recognition) and ``harness`` (agents, matches, experiments).
"""

__version__ = "0.1.0"
