"""Two-party quantum computation over a classical channel, at desk scale.

A classical Alice and a quantum Bob run oblivious quantum function
evaluation and blind measurement-based two-party computation, built on
remote state preparation from a 2-regular trapdoor function.  Everything
is sized for exact enumeration so the security-proof mechanics
(simulators, extractors, view comparisons) are runnable, not just stated.
"""

__version__ = "0.1.0"
