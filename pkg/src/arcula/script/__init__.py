"""Script emission and evaluation for the Bitcoin Cash dialect used by wallet addresses."""

from .builder import (
    AuditHit,
    SizeReport,
    arcula_identity,
    audit_scripts,
    is_p2sh,
    lock_arcula,
    lock_perturbed,
    lock_standard,
    nominal_size,
    p2sh_wrap,
    size_report,
    size_table,
    unlock_arcula,
    unlinkable_lock,
    unlock_standard,
)
from .nodes import Op, PushKind, Script, ScriptOp, parse_script
from .vm import VmContext, VmResult, eval_script, evaluate

__all__ = [
    "AuditHit",
    "Op",
    "PushKind",
    "Script",
    "ScriptOp",
    "SizeReport",
    "VmContext",
    "VmResult",
    "arcula_identity",
    "audit_scripts",
    "eval_script",
    "evaluate",
    "is_p2sh",
    "lock_arcula",
    "lock_perturbed",
    "lock_standard",
    "nominal_size",
    "p2sh_wrap",
    "parse_script",
    "size_report",
    "size_table",
    "unlock_arcula",
    "unlinkable_lock",
    "unlock_standard",
]
