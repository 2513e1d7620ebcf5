"""Lock-free hopscotch hashing set, with the machinery to trust it.

The package splits into layers:

* :mod:`hopscotch.words`   emulated 64-bit atomic words
* :mod:`hopscotch.kcas`    multi-word CAS with helping and descriptor reuse
* :mod:`hopscotch.core`    the lock-free hopscotch set itself
* :mod:`hopscotch.baselines` segment-locked table and a serial oracle
* :mod:`hopscotch.checker` linearizability, ledger and structural audits
* :mod:`hopscotch.interleave` deterministic schedule exploration
* :mod:`hopscotch.harness` workload driver and CSV emission
"""

from .baselines import LockedHopscotchSet, OracleSet
from .checker import (AuditReport, History, LinearizationResult, OpRecord,
                      SearchBoundExceeded, check_linearizable, ledger_audit,
                      structural_audit)
from .core import (BucketView, LockFreeHopscotchSet, TableConfig,
                   TableSaturated)
from .harness import WorkloadConfig, emit_csv, prefill, run_benchmark
from .kcas import KcasDescriptor, KcasDomain, acquire_descriptor, kcas_execute, kcas_read
from .words import AtomicWordArray

__version__ = "0.1.0"

__all__ = [
    "AtomicWordArray",
    "AuditReport",
    "BucketView",
    "History",
    "KcasDescriptor",
    "KcasDomain",
    "LinearizationResult",
    "LockFreeHopscotchSet",
    "LockedHopscotchSet",
    "OpRecord",
    "OracleSet",
    "SearchBoundExceeded",
    "TableConfig",
    "TableSaturated",
    "WorkloadConfig",
    "acquire_descriptor",
    "check_linearizable",
    "emit_csv",
    "kcas_execute",
    "kcas_read",
    "ledger_audit",
    "prefill",
    "run_benchmark",
    "structural_audit",
    "__version__",
]
