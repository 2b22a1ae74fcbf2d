"""
Fisher Quant Bench - Fisher information of quantized samples and distributed estimation bounds

This package computes the Fisher information carried by k-bit quantized samples,
evaluates trace upper bounds and van Trees minimax lower bounds for distributed
estimation under independent, sequential and blackboard protocols, and checks
achievable risk rates against those bounds by Monte Carlo simulation.
"""

__version__ = "0.1.0"
