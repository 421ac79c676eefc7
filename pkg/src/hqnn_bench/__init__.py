"""Benchmark of classical and hybrid quantum-classical classifiers by FLOPs.

Modules: ``spiral`` (data), ``nn`` (MLP and training), ``qsim`` (statevector
simulator), ``hybrid`` (hybrid model), ``flops`` (cost model), ``search``
(architecture search) and ``bench`` / ``cli`` (sweep orchestration).
"""

__version__ = "0.1.0"
