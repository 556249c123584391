"""Probabilistic rule mining, fixed points of prediction and recognition."""
from .core import EmpiricalSystem, Literal, Rule, eta, cond_prob, load_system
from .fixpoint import RuleBase, enumerate_classes, kr, prphi_fixpoint, prphi_step, pr_closure, pr_step
from .miner import MinerConfig, RuleSet, mine_all, mine_msr, mine_spl, sp_inference_tree
from .recognize import calibrate_threshold, classify, regular_matrix, score

__version__ = "0.1.0"
