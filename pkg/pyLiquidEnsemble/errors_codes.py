def path_invalid(parent_path, operation):
    return f"INVALID Path for {operation}\n" \
           f"{operation} attempt to navigate to a directory or file at {parent_path} but it does not exist"


def invalid_ensemble(n):
    return f"INVALID ENSEMBLE SIZE\n" \
           f"An ensemble needs at least one voter to delegate to itself, yet found n = {n}"


def voter_out_of_range(voter, n):
    return f"VOTER OUT OF RANGE\n" \
           f"Voters are indexed in [0, {n}) yet found voter {voter}"


def cycle_detected(voter, chain):
    return f"CYCLE DETECTED\n" \
           f"Following delegations from voter {voter} never reached a self-delegation: {chain}\n" \
           f"Delegations may only point at voters with a strictly higher slope, so this is a mechanism bug"


def invalid_input(operation, reason):
    return f"INVALID INPUT for {operation}\n" \
           f"{reason}"


def invalid_metric(metric):
    return f"INVALID METRIC\n" \
           f"Metric must be one of accuracy, balanced_accuracy or macro_f1 yet found {metric}"


def invalid_probability_function(prob_fn):
    return f"INVALID PROBABILITY FUNCTION\n" \
           f"Delegation probability functions are random_better, proportional_better, proportional_weighted and " \
           f"max_diversity yet found {prob_fn}"


def invalid_write(batch_index, voter):
    return f"INVALID WRITE\n" \
           f"A score for batch {batch_index} and voter {voter} has already been recorded"


def invalid_score(score):
    return f"INVALID SCORE\n" \
           f"Scores are metric values in [0, 1] yet found {score}"


def stale_batch(batch_index, oldest):
    return f"STALE BATCH\n" \
           f"Batch {batch_index} is older than the oldest batch still held in the history ({oldest})"


def insufficient_history(voter, recorded, required):
    return f"INSUFFICIENT HISTORY\n" \
           f"Voter {voter} has {recorded} recorded batches but {required} are required"


def missing_guru_weight(voter, guru):
    return f"MISSING GURU WEIGHT\n" \
           f"Voter {voter} resolves to guru {guru} which holds zero weight in the prior weights"


def invalid_distribution(delegator, total):
    return f"INVALID DISTRIBUTION\n" \
           f"Delegation probabilities of voter {delegator} must sum to 1 yet sum to {total}"


def invalid_diversity_context(shape, n):
    return f"INVALID DIVERSITY CONTEXT\n" \
           f"Class probabilities must hold one probability row per voter ({n}) yet found shape {shape}"


def invalid_config(field, value, reason):
    return f"INVALID CONFIG for field {field}\n" \
           f"Found {value}: {reason}"


def unknown_config_keys(keys):
    return f"UNKNOWN CONFIG KEYS\n" \
           f"The config file holds keys that are not experiment fields: {sorted(keys)}"


def dimension_mismatch(expected, found):
    return f"DIMENSION MISMATCH\n" \
           f"The classifier expects {expected} features per example yet found {found}"


def label_out_of_range(label, classes):
    return f"INVALID LABEL\n" \
           f"Labels must be in [0, {classes}) yet found {label}"


def numerical_divergence(loss):
    return f"NUMERICAL DIVERGENCE\n" \
           f"Training produced a non-finite loss of {loss}; the run cannot continue"


def stream_corruption(batch_index, label, classes):
    return f"STREAM CORRUPTION\n" \
           f"Batch {batch_index} holds label {label} outside the configured label space [0, {classes})"


def empty_gurus(operation):
    return f"INVALID STATE for {operation}\n" \
           f"Weighted prediction requires at least one guru"


def idx_magic_violation(file_name, field, expected, found):
    return f"INVALID IDX MAGIC for file at path: {file_name}\n" \
           f"The {field} file must start with the magic number {expected:#010x} yet found {found:#010x}"


def idx_dims_violation(file_name, field, dims):
    return f"INVALID IDX DIMENSIONS for file at path: {file_name}\n" \
           f"The {field} file must describe [count, 28, 28] images yet found {dims}"


def idx_truncated(file_name, field, expected, found):
    return f"TRUNCATED IDX FILE for file at path: {file_name}\n" \
           f"The {field} payload should hold {expected} bytes yet found {found}"


def idx_count_mismatch(image_count, label_count):
    return f"IDX COUNT MISMATCH\n" \
           f"The images file holds {image_count} images yet the labels file holds {label_count} labels"


def idx_label_violation(file_name, label):
    return f"INVALID IDX LABEL for file at path: {file_name}\n" \
           f"MNIST labels must be digits 0-9 yet found {label}"


def checkpoint_magic_violation(file_name):
    return f"INVALID CHECKPOINT for file at path: {file_name}\n" \
           f"Checkpoints begin with the 4 bytes b'lqdm'"


def checkpoint_version_violation(file_name, version):
    return f"INVALID CHECKPOINT VERSION for file at path: {file_name}\n" \
           f"Only version 1 checkpoints can be read yet found {version}"


def compression_violation(file_name, compression_flag):
    return f"INVALID COMPRESSION FLAG for file at path: {file_name}\n" \
           f"Checkpoints have a flag, where the first two bits represent the compression of the data with 0 being " \
           f"uncompressed, 1 being compressed via zlib, and 2 being compressed via z-standard. Yet found\n" \
           f"Compression flag: {compression_flag}"


def checkpoint_payload_violation(file_name, expected, found):
    return f"INVALID CHECKPOINT PAYLOAD for file at path: {file_name}\n" \
           f"The dims require {expected} parameters yet the payload holds {found}"


def log_write_failure(path, error):
    return f"LOG WRITE FAILURE at path: {path}\n" \
           f"{error}"
