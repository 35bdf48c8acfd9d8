from .delegationObject import DelegationState
from .performanceObject import PerformanceHistory, TrendSlopes, evaluate_metric, n_plus
from .probabilityFunctions import *
from .learnerObject import MlpClassifier, ParameterBudget, init_classifier, weighted_ensemble_predict
from .streamObject import *
from .ensembleObject import *
from .experimentObject import *
