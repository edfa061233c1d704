"""iaas-signature-selection-tool: long-term IaaS selection from free trials.

Combines short free-trial observations with provider performance signatures
to predict and rank long-term provider performance.
"""

__version__ = "0.1.0"
