"""
ptppm - personalized trajectory privacy protection engine.

Mobility modeling, personalized budget allocation, protection-location-set
search and permute-and-flip release, plus the attack models and the
privacy/QoS evaluation harness that exercise them.
"""

__version__ = "1.0.0"
