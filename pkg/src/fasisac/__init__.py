"""Fluid-antenna ISAC: covariance design, DDPG antenna positioning, BCD orchestration."""
__version__ = "0.1.0"
