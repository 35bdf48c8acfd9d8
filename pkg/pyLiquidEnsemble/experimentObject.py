from .ensembleObject import (EnsembleState, KBatConfig, MECHANISMS, StudentExpertConfig, static_predict,
                             student_expert_step, train_step)
from .streamObject import (SCENARIOS, build_rotated_mnist, build_split_mnist, build_synthetic, build_test_set,
                           load_mnist)
from .probabilityFunctions import PROBABILITY_FUNCTIONS
from .performanceObject import METRICS
from .learnerObject import ParameterBudget, member_params
from . import errors_codes as ec
from . import misc as mc

from dataclasses import asdict, dataclass, fields, replace
from scipy.stats import linregress
from itertools import product
from pathlib import Path
from multiprocessing import Pool
import pandas as pd
import numpy as np
import time
import yaml

DATASETS = ("split_mnist", "rotated_mnist", "synthetic")
SWEEP_FIELDS = ("k", "k_s", "k_e", "metric", "prob_fn")
MNIST_D = 784


def _typed(name, value, default, from_text=False):
    """
    value checked against the type of the field default. Sweep fields may hold a list of such values. With from_text,
    strings are read as floats for float fields since YAML leaves exponents without a dot, such as 1e-3, as strings.

    :raises ValueError: If value is not of the field type
    """
    if name in SWEEP_FIELDS and isinstance(value, (list, tuple)):
        return [_typed(name, item, default, from_text) for item in value]

    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, int):
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return int(value)
    elif isinstance(default, float):
        if isinstance(value, (int, float, np.number)) and not isinstance(value, bool):
            return float(value)
        if from_text and isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
    elif isinstance(value, str):
        return value
    raise ValueError(ec.invalid_config(name, value, f"must be of type {type(default).__name__}"))


@dataclass
class ExperimentConfig:
    scenario: str = "class_incremental"
    dataset: str = "split_mnist"
    mechanism: str = "kbat"
    n: int = 8
    k: int = 1
    k_s: int = 1
    k_e: int = 1
    w: int = 50
    B: int = 128
    metric: str = "balanced_accuracy"
    prob_fn: str = "proportional_better"
    trials: int = 3
    seed: int = 0
    budget: int = 0
    reference_hidden: int = 256
    learning_rate: float = 1e-3
    out: str = "results"
    data_dir: str = "data/mnist"
    n_contexts: int = 5
    m_classes: int = 10
    d: int = 16
    examples_per_class: int = 256
    sigma: float = 0.2
    rotated_pool: str = "disjoint"
    workers: int = 1
    log_every: int = 100
    verbose: bool = True

    @classmethod
    def from_file(cls, path):
        """
        Load a flat YAML mapping with one key per field

        :raises ValueError: On keys that are not fields, or values that do not match the type of the field
        """
        path = Path(path)
        if not path.exists():
            raise IOError(ec.path_invalid(path, "ExperimentConfig.from_file"))

        with open(path, "r") as file:
            values = yaml.safe_load(file) or {}

        defaults = {field.name: field.default for field in fields(cls)}
        unknown = set(values) - set(defaults)
        if unknown:
            raise ValueError(ec.unknown_config_keys(unknown))

        return cls(**{name: _typed(name, value, defaults[name], from_text=True) for name, value in values.items()})

    def to_dict(self):
        return asdict(self)

    def snapshot(self):
        """The resolved config as YAML"""
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @property
    def run_id(self):
        if self.mechanism == "student_expert":
            return f"{self.mechanism}-{self.dataset}-ks{self.k_s}-ke{self.k_e}-{self.metric}-{self.prob_fn}"
        elif self.mechanism == "kbat":
            return f"{self.mechanism}-{self.dataset}-k{self.k}-{self.metric}-{self.prob_fn}"
        return f"{self.mechanism}-{self.dataset}"

    @property
    def input_dim(self):
        return self.d if self.dataset == "synthetic" else MNIST_D

    @property
    def label_space(self):
        return self.m_classes if self.dataset == "synthetic" else 10

    @property
    def contexts(self):
        return self.n_contexts if self.dataset != "split_mnist" else 5

    def is_grid(self):
        """If any sweepable field holds a list"""
        return any(isinstance(getattr(self, name), (list, tuple)) for name in SWEEP_FIELDS)

    def expand(self):
        """Every combination of the list valued sweep fields, as scalar configs"""
        grid = {name: getattr(self, name) if isinstance(getattr(self, name), (list, tuple))
                else [getattr(self, name)] for name in SWEEP_FIELDS}
        return [replace(self, **dict(zip(SWEEP_FIELDS, values))) for values in product(*grid.values())]

    def resolve(self):
        """
        Apply the implied settings: a single learner is one voter with the whole budget, and a budget of 0 means the
        budget of a single learner of hidden width reference_hidden
        """
        self.check_types()
        resolved = self
        if self.mechanism == "single_learner" and (self.n != 1 or self.k != 1):
            mc.report(f"single_learner runs one voter: n {self.n} -> 1, k {self.k} -> 1", self.verbose)
            resolved = replace(resolved, n=1, k=1)
        if resolved.budget <= 0:
            resolved = replace(resolved, budget=member_params(resolved.input_dim, resolved.reference_hidden,
                                                              resolved.label_space))
        return resolved

    def check_types(self):
        """
        :raises ValueError: On the first field whose value does not match the type of its default
        """
        for field in fields(self):
            _typed(field.name, getattr(self, field.name), field.default)
        return self

    def validate(self):
        """
        Check every field and field combination before any compute

        :raises ValueError: On the first invalid field
        """
        if self.is_grid():
            raise ValueError(ec.invalid_config("grid", [name for name in SWEEP_FIELDS if isinstance(
                getattr(self, name), (list, tuple))], "list values are only accepted by sweep"))
        self.check_types()
        if self.scenario not in SCENARIOS:
            raise ValueError(ec.invalid_config("scenario", self.scenario, f"scenarios are {SCENARIOS}"))
        if self.dataset not in DATASETS:
            raise ValueError(ec.invalid_config("dataset", self.dataset, f"datasets are {DATASETS}"))
        if self.dataset == "split_mnist" and self.scenario != "class_incremental":
            raise ValueError(ec.invalid_config("scenario", self.scenario, "split_mnist is class_incremental only"))
        if self.dataset == "rotated_mnist" and self.scenario != "domain_incremental":
            raise ValueError(ec.invalid_config("scenario", self.scenario, "rotated_mnist is domain_incremental only"))
        if self.mechanism not in MECHANISMS:
            raise ValueError(ec.invalid_config("mechanism", self.mechanism, f"mechanisms are {MECHANISMS}"))
        if self.metric not in METRICS:
            raise ValueError(ec.invalid_metric(self.metric))
        if self.prob_fn not in PROBABILITY_FUNCTIONS:
            raise ValueError(ec.invalid_probability_function(self.prob_fn))
        if self.rotated_pool not in ("disjoint", "full"):
            raise ValueError(ec.invalid_config("rotated_pool", self.rotated_pool, "the pool is disjoint or full"))

        for name in ("n", "B", "trials", "n_contexts", "m_classes", "d", "examples_per_class", "workers",
                     "log_every", "reference_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(ec.invalid_config(name, getattr(self, name), "must be at least 1"))
        if self.seed < 0:
            raise ValueError(ec.invalid_config("seed", self.seed, "seeds are non-negative"))
        if self.sigma < 0:
            raise ValueError(ec.invalid_config("sigma", self.sigma, "a standard deviation is non-negative"))
        if self.dataset == "synthetic" and self.scenario == "class_incremental" and self.m_classes < self.n_contexts:
            raise ValueError(ec.invalid_config("m_classes", self.m_classes, "every context needs a class"))

        if self.mechanism == "kbat":
            KBatConfig(self.k, self.w, self.metric, self.prob_fn).validate(self.n)
        elif self.mechanism == "student_expert":
            StudentExpertConfig(self.k_s, self.k_e, self.w, self.metric, self.prob_fn).validate(self.n)

        ParameterBudget(self.budget, self.n).hidden_width(self.input_dim, self.label_space)
        return self

    def mechanism_config(self):
        if self.mechanism == "kbat":
            return KBatConfig(self.k, self.w, self.metric, self.prob_fn)
        elif self.mechanism == "student_expert":
            return StudentExpertConfig(self.k_s, self.k_e, self.w, self.metric, self.prob_fn)
        return None


class TrialResult:
    __slots__ = ["trial", "mean_acc", "context_accs", "context_counts", "records", "wall_clock"]

    def __init__(self, trial, mean_acc, context_accs, context_counts, records, wall_clock):
        """
        Test accuracy of one trial in percent, over the whole test set and within each context, with the per batch
        training records
        """
        self.trial = trial
        self.mean_acc = mean_acc
        self.context_accs = context_accs
        self.context_counts = context_counts
        self.records = records
        self.wall_clock = wall_clock

    def __repr__(self):
        return f"Trial {self.trial}: {self.mean_acc:.2f}% - contexts {np.round(self.context_accs, 2).tolist()}"

    def weighted_context_mean(self):
        """Per context accuracies weighted by their example counts; equals mean_acc"""
        return float(np.average(self.context_accs, weights=self.context_counts))


class RunResult:
    def __init__(self, config, trials):
        """Every trial of one resolved config"""
        self.config = config
        self.trials = trials

    def __repr__(self):
        return f"{self.config.run_id}: {self.mean():.2f} +/- {self.std():.2f} over {len(self.trials)} trials"

    def mean(self):
        return float(np.mean([trial.mean_acc for trial in self.trials]))

    def std(self):
        # Sample deviation, as in sweep.csv
        return float(pd.Series([trial.mean_acc for trial in self.trials]).std())

    def context_mean(self):
        return np.mean([trial.context_accs for trial in self.trials], axis=0)

    def summary_frame(self):
        cfg = self.config
        rows = []
        for trial in self.trials:
            row = {"run_id": cfg.run_id, "mechanism": cfg.mechanism, "dataset": cfg.dataset,
                   "k": cfg.k_s if cfg.mechanism == "student_expert" else cfg.k, "metric": cfg.metric,
                   "prob_fn": cfg.prob_fn, "trial": trial.trial, "mean_acc": trial.mean_acc}
            row.update({f"c{index + 1}": acc for index, acc in enumerate(trial.context_accs)})
            row["k_e"] = cfg.k_e if cfg.mechanism == "student_expert" else ""
            rows.append(row)
        return pd.DataFrame(rows)

    def timeline_frame(self):
        rows = []
        for trial in self.trials:
            for record in trial.records:
                for voter in range(len(record.is_guru)):
                    rows.append((trial.trial, record.batch_index, voter, bool(record.is_guru[voter]),
                                 int(record.weights[voter]), float(record.scores[voter]), float(record.slopes[voter])))
        return pd.DataFrame(rows, columns=["trial", "batch", "voter", "is_guru", "weight", "metric_score", "slope"])

    def curve_frame(self):
        rows = [(trial.trial, record.batch_index, record.context, record.ensemble_acc, record.mean_loss)
                for trial in self.trials for record in trial.records]
        return pd.DataFrame(rows, columns=["trial", "batch", "context", "ensemble_acc", "mean_loss"])


def load_datasets(cfg):
    """The canonical train and test splits, or (None, None) for synthetic streams"""
    if cfg.dataset == "synthetic":
        return None, None
    return load_mnist(cfg.data_dir, "train"), load_mnist(cfg.data_dir, "test")


def build_streams(cfg, train_set, test_set, trial):
    """Training stream and test stream of one trial; the test stream is ordered only for Student-Expert"""
    seed = mc.trial_seed(cfg.seed, trial)
    mode = "test_ordered" if cfg.mechanism == "student_expert" else "test_iid"

    if cfg.dataset == "split_mnist":
        return build_split_mnist(train_set, cfg.B, seed), build_test_set(test_set, cfg.dataset, mode, cfg.B, seed)
    elif cfg.dataset == "rotated_mnist":
        return (build_rotated_mnist(train_set, cfg.n_contexts, cfg.B, seed, "train", cfg.rotated_pool),
                build_test_set(test_set, cfg.dataset, mode, cfg.B, seed, n_contexts=cfg.n_contexts,
                               pool=cfg.rotated_pool))

    synthetic = dict(n_contexts=cfg.n_contexts, m_classes=cfg.m_classes, d=cfg.d, scenario=cfg.scenario,
                     examples_per_class=cfg.examples_per_class, sigma=cfg.sigma)
    return (build_synthetic(batch_size=cfg.B, seed=seed, phase="train", **synthetic),
            build_test_set(None, cfg.dataset, mode, cfg.B, seed, **synthetic))


def run_trial(cfg, trial, train_set=None, test_set=None):
    """
    Train a freshly initialised ensemble on every context of the training stream, then evaluate it: statically with
    every voter at weight 1 on the i.i.d. test pass, or prequentially with the experts on the ordered test stream for
    Student-Expert.

    :type cfg: ExperimentConfig
    :rtype: TrialResult
    """
    start = time.time()
    train_stream, test_stream = build_streams(cfg, train_set, test_set, trial)
    mechanism_cfg = cfg.mechanism_config()

    h = ParameterBudget(cfg.budget, cfg.n).hidden_width(cfg.input_dim, cfg.label_space)
    state = EnsembleState.initialise(cfg.n, cfg.input_dim, h, cfg.label_space, cfg.w, cfg.seed, trial,
                                     cfg.learning_rate)
    mc.report(f"{cfg.run_id} trial {trial}: {cfg.n} voters of hidden width {h}, {len(train_stream)} batches",
              cfg.verbose)

    records = []
    context = None
    for batch in train_stream:
        if batch.context_label != context:
            context = batch.context_label
            mc.report(f"{cfg.run_id} trial {trial}: context {context} begins at batch {batch.batch_index}",
                      cfg.verbose)

        if cfg.mechanism == "student_expert":
            _, record = student_expert_step(state, batch, mechanism_cfg, learn=True)
        else:
            record = train_step(state, batch, mechanism_cfg)
        records.append(record)

        if (batch.batch_index + 1) % cfg.log_every == 0:
            mc.report(f"{cfg.run_id} trial {trial}: batch {batch.batch_index + 1} gurus "
                      f"{np.flatnonzero(record.is_guru).tolist()} train acc {record.ensemble_acc:.3f}", cfg.verbose)

    correct = np.zeros(test_stream.n_examples, dtype=bool)
    position = 0
    for batch in test_stream:
        if cfg.mechanism == "student_expert":
            predictions, _ = student_expert_step(state, batch, mechanism_cfg, learn=False)
        else:
            predictions = static_predict(state.voters, batch.features)
        correct[position:position + len(batch)] = predictions == batch.labels
        position += len(batch)

    contexts = list(range(cfg.contexts))
    context_counts = [int((test_stream.context_labels == c).sum()) for c in contexts]
    context_accs = [float(100 * correct[test_stream.context_labels == c].mean()) if count else 0.0
                    for c, count in zip(contexts, context_counts)]
    result = TrialResult(trial, float(100 * correct.mean()), context_accs, context_counts, records,
                         time.time() - start)
    mc.report(f"{cfg.run_id} {result} in {result.wall_clock:.1f}s", cfg.verbose)
    return result


def run_experiment(cfg):
    """
    Every trial of one config. Trials run in a process pool when workers > 1 and are returned in trial order.

    :type cfg: ExperimentConfig
    :rtype: RunResult
    """
    cfg = cfg.resolve().validate()
    train_set, test_set = load_datasets(cfg)

    trials = list(range(cfg.trials))
    if cfg.workers > 1 and cfg.trials > 1:
        with Pool(cfg.workers) as pool:
            results = pool.starmap(run_trial, [(cfg, trial, train_set, test_set) for trial in trials])
    else:
        results = [run_trial(cfg, trial, train_set, test_set) for trial in trials]
    return RunResult(cfg, results)


def _write_csv(frame, path):
    try:
        frame.to_csv(path, index=False, encoding="utf-8")
    except OSError as error:
        raise IOError(ec.log_write_failure(path, error))


def emit_logs(result, directory):
    """
    Write summary.csv, timeline.csv, curve.csv and config.snapshot for a run into directory

    :type result: RunResult
    :return: The directory written to
    :rtype: Path
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with open(Path(directory, "config.snapshot"), "w", encoding="utf-8") as file:
            file.write(result.config.snapshot())
    except OSError as error:
        raise IOError(ec.log_write_failure(directory, error))

    _write_csv(result.summary_frame(), Path(directory, "summary.csv"))
    _write_csv(result.timeline_frame(), Path(directory, "timeline.csv"))
    _write_csv(result.curve_frame(), Path(directory, "curve.csv"))
    mc.report(f"Written logs of {result.config.run_id} to {directory}", result.config.verbose)
    return directory


def comparison_table(summary):
    """
    Mean and standard deviation of every accuracy column per cell, with best_k marking the k of highest mean accuracy
    within each (mechanism, dataset, metric, prob_fn, k_e) group

    :type summary: pd.DataFrame
    :rtype: pd.DataFrame
    """
    keys = ["mechanism", "dataset", "metric", "prob_fn", "k_e", "k"]
    accuracy_columns = [column for column in summary.columns if column == "mean_acc" or
                        (column.startswith("c") and column[1:].isdigit())]

    grouped = summary.fillna({"k_e": ""}).groupby(keys, sort=False)[accuracy_columns]
    table = grouped.agg(["mean", "std"])
    table.columns = [f"{column}_{stat}" for column, stat in table.columns]
    table = table.reset_index()
    table["trials"] = grouped.size().values

    best = table.groupby(keys[:-1], sort=False)["mean_acc_mean"].transform("max")
    table["best_k"] = table["mean_acc_mean"] == best
    return table


def sweep(cfg):
    """
    Run every cell of the grid spanned by the list valued fields of cfg, writing each cell's logs under
    out/<run_id>, then the combined summary.csv and the grouped sweep.csv into out

    :type cfg: ExperimentConfig
    :return: The comparison table
    :rtype: pd.DataFrame
    """
    cells = [cell.resolve() for cell in cfg.expand()]
    seen = set()
    cells = [cell for cell in cells if not (cell.run_id in seen or seen.add(cell.run_id))]
    for cell in cells:
        cell.validate()

    mc.report(f"Sweeping {len(cells)} cells of {cfg.trials} trials", cfg.verbose)
    results = []
    for index, cell in enumerate(cells):
        mc.report(f"Cell {index + 1}/{len(cells)}: {cell.run_id}", cfg.verbose)
        result = run_experiment(cell)
        emit_logs(result, Path(cfg.out, cell.run_id))
        results.append(result)

    summary = pd.concat([result.summary_frame() for result in results], ignore_index=True)
    table = comparison_table(summary)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    _write_csv(summary, Path(cfg.out, "summary.csv"))
    _write_csv(table, Path(cfg.out, "sweep.csv"))
    return table


def guru_dominance(records, w):
    """
    For each context, the voter that was a learning guru on the most batches after warm-up and the share of the
    context's post warm-up batches it learned on

    :param records: BatchRecords of one trial
    :type records: list

    :return: {context: (voter, share)}
    :rtype: dict
    """
    dominance = {}
    contexts = sorted(set(record.context for record in records))
    for context in contexts:
        flags = np.array([record.is_guru for record in records if record.context == context and
                          record.batch_index >= w])
        if len(flags) == 0:
            continue
        counts = flags.sum(axis=0)
        voter = int(np.argmax(counts))
        dominance[context] = (voter, float(counts[voter] / len(flags)))
    return dominance


def context_learning_slope(records, context, first=20):
    """Slope of the ensemble training accuracy over the first batches of a context"""
    accuracy = [record.ensemble_acc for record in records if record.context == context][:first]
    if len(accuracy) < 2:
        raise ValueError(ec.insufficient_history(-1, len(accuracy), 2))
    return float(linregress(np.arange(len(accuracy)), accuracy).slope)
