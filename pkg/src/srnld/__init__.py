"""Structured representations (AMR, PST, FOL) to natural-language descriptions.

Modules, bottom up: ``amr``, ``pst`` and ``fol`` parse and print the three
representations; ``nld`` maps them to sentences through relation
dictionaries; ``refine`` polishes those sentences offline or through a chat
endpoint with voting; ``promptkit`` renders task prompts; ``gensr`` builds
SFT mixtures; ``metrics`` scores predictions; ``evalrun`` runs cached
batches; ``cli`` ties it together.
"""

__version__ = "0.1.0"
