from .ensemble import Ensemble, TrainTargets, normalize_action, prior_q
from .flags import PAPER_VARIANTS, VOTE_MODES, VariantFlags

__all__ = ["Ensemble", "TrainTargets", "normalize_action", "prior_q", "VariantFlags", "PAPER_VARIANTS", "VOTE_MODES"]
