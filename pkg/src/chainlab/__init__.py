"""chainlab: a deterministic blockchain consensus laboratory.

Simulates honest and adversarial nodes running proof-of-work or coin-days
proof-of-stake over a latency-modeled broadcast network, and measures block
intervals, throughput, fork rates, and slashing outcomes.
"""

__version__ = "0.1.0"
