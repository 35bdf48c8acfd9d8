from . import errors_codes as ec
from . import misc as mc

from scipy.ndimage import map_coordinates
from pathlib import Path
import numpy as np
import struct

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
IMAGE_SIDE = 28
ROTATION_CHUNK = 1024

SPLIT_MNIST_CONTEXTS = [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)]
PHASES = ("train", "test_ordered", "test_iid")
SCENARIOS = ("class_incremental", "domain_incremental")

MNIST_FILES = {"train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
               "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")}

# Sub-streams of misc.SHUFFLE_STREAM
_ANGLES, _POOL, _ORDER = 0, 1, 2


class MnistDataset:
    __slots__ = ["images", "labels", "source"]

    def __init__(self, images, labels, source=None):
        """
        Grey-scale 28x28 images scaled to [0, 1] and their digit labels
        """
        self.images = np.asarray(images, dtype=np.float32)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.source = source

    def __repr__(self):
        return f"MNIST {len(self)} examples from {self.source}"

    def __len__(self):
        return len(self.labels)

    @property
    def features(self):
        """Images flattened row-major to 784-vectors"""
        return self.images.reshape(len(self), -1)


class StreamBatch:
    __slots__ = ["features", "labels", "class_labels", "context_labels", "global_labels", "context_label",
                 "batch_index"]

    def __init__(self, features, labels, class_labels, context_labels, global_labels, context_label, batch_index):
        """
        B examples sharing a context, where labels is the learning target of the scenario: the global label in
        class-incremental streams and the class label in domain-incremental ones. Batches of an i.i.d. test pass mix
        contexts and carry a context_label of -1.
        """
        self.features = features
        self.labels = labels
        self.class_labels = class_labels
        self.context_labels = context_labels
        self.global_labels = global_labels
        self.context_label = int(context_label)
        self.batch_index = int(batch_index)

    def __repr__(self):
        return f"Batch {self.batch_index} - context {self.context_label} - {len(self)} examples"

    def __len__(self):
        return len(self.labels)


class DataStream:
    def __init__(self, features, targets, class_labels, context_labels, global_labels, n_classes, scenario, phase,
                 batch_size, contexts_in_order=True, angles=None):
        """
        An ordered stream of labelled examples cut into batches. When contexts_in_order the examples are laid out
        context by context and batches never straddle a context boundary, the last batch of a context being short.

        :param n_classes: Size of the label space of the learning target
        :type n_classes: int

        :param angles: Rotation of each context in degrees, for rotated streams
        :type angles: list | None
        """
        self.features = np.asarray(features, dtype=np.float32)
        self.targets = np.asarray(targets, dtype=np.int64)
        self.class_labels = np.asarray(class_labels, dtype=np.int64)
        self.context_labels = np.asarray(context_labels, dtype=np.int64)
        self.global_labels = np.asarray(global_labels, dtype=np.int64)
        self.n_classes = int(n_classes)
        self.scenario = scenario
        self.phase = phase
        self.batch_size = int(batch_size)
        self.angles = angles

        if self.batch_size < 1:
            raise ValueError(ec.invalid_config("B", batch_size, "batch size must be at least 1"))

        self._bounds = []
        if contexts_in_order:
            boundaries = np.flatnonzero(np.diff(self.context_labels)) + 1
            for segment_start, segment_end in zip(np.r_[0, boundaries], np.r_[boundaries, len(self.targets)]):
                for start in range(segment_start, segment_end, self.batch_size):
                    self._bounds.append((start, min(start + self.batch_size, segment_end),
                                         int(self.context_labels[segment_start])))
        else:
            for start in range(0, len(self.targets), self.batch_size):
                self._bounds.append((start, min(start + self.batch_size, len(self.targets)), -1))

    def __repr__(self):
        return f"{self.scenario} {self.phase} stream: {len(self.targets)} examples in {len(self)} batches"

    def __len__(self):
        return len(self._bounds)

    def __iter__(self):
        for batch_index in range(len(self)):
            yield self.batch(batch_index)

    @property
    def n_examples(self):
        return len(self.targets)

    @property
    def d(self):
        return self.features.shape[1]

    def contexts(self):
        """Context labels in the order they first appear"""
        _, first = np.unique(self.context_labels, return_index=True)
        return [int(c) for c in self.context_labels[np.sort(first)]]

    def context_of_batch(self):
        """Context label of each batch"""
        return np.array([context for _, _, context in self._bounds], dtype=np.int64)

    def batch(self, batch_index):
        start, end, context = self._bounds[batch_index]
        return StreamBatch(self.features[start:end], self.targets[start:end], self.class_labels[start:end],
                           self.context_labels[start:end], self.global_labels[start:end], context, batch_index)


def _read_idx(path, field, magic_number, dims_count):
    """Read an IDX header and payload, validating the magic number and the payload length"""
    path = Path(path)
    if not path.exists():
        raise IOError(ec.path_invalid(path, "load_idx"))

    with open(path, "rb") as file:
        header = file.read(4 * (1 + dims_count))
        payload = file.read()

    if len(header) < 4:
        raise ValueError(ec.idx_truncated(path.name, field, 4 * (1 + dims_count), len(header)))
    magic = mc.struct_unpack(">I", header[:4])
    if magic != magic_number:
        raise ValueError(ec.idx_magic_violation(path.name, field, magic_number, magic))
    if len(header) < 4 * (1 + dims_count):
        raise ValueError(ec.idx_truncated(path.name, field, 4 * (1 + dims_count), len(header)))

    dims = list(struct.unpack(f">{dims_count}I", header[4:]))
    expected = int(np.prod(dims))
    if len(payload) != expected:
        raise ValueError(ec.idx_truncated(path.name, field, expected, len(payload)))
    return dims, payload


def load_idx(images_path, labels_path):
    """
    Parse a pair of big-endian IDX files: images with magic 0x00000803 and dims [count, 28, 28], labels with magic
    0x00000801 and dims [count]. Pixels are scaled to [0, 1] by division by 255.

    :raises ValueError: On a wrong magic number, unexpected image dims, a payload of the wrong length, a count
        mismatch, or a label outside 0-9. The message names the offending field
    :raises IOError: If a file does not exist

    :rtype: MnistDataset
    """
    image_dims, image_bytes = _read_idx(images_path, "images", IDX_IMAGES_MAGIC, 3)
    if image_dims[1:] != [IMAGE_SIDE, IMAGE_SIDE]:
        raise ValueError(ec.idx_dims_violation(Path(images_path).name, "images", image_dims))

    label_dims, label_bytes = _read_idx(labels_path, "labels", IDX_LABELS_MAGIC, 1)
    if label_dims[0] != image_dims[0]:
        raise ValueError(ec.idx_count_mismatch(image_dims[0], label_dims[0]))

    labels = np.frombuffer(label_bytes, dtype=np.uint8)
    if len(labels) and labels.max() > 9:
        raise ValueError(ec.idx_label_violation(Path(labels_path).name, int(labels.max())))

    images = np.frombuffer(image_bytes, dtype=np.uint8).reshape(image_dims).astype(np.float32) / 255.0
    return MnistDataset(images, labels.astype(np.int64), Path(images_path).parent)


def load_mnist(data_dir, split="train"):
    """Load the canonical train or test split from data_dir"""
    images_name, labels_name = MNIST_FILES[split]
    return load_idx(Path(data_dir, images_name), Path(data_dir, labels_name))


def rotate_images(images, angle_degrees):
    """
    Rotate a stack of images about the centre (13.5, 13.5) by inverse mapping with bilinear interpolation; samples
    falling outside the source grid are 0 and results are clamped to [0, 1].

    :param images: Array of shape [count, 28, 28]
    :type images: np.ndarray

    :rtype: np.ndarray
    """
    images = np.asarray(images, dtype=np.float32)
    count, rows, cols = images.shape
    theta = np.deg2rad(angle_degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    row_grid, col_grid = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    y = row_grid - (rows - 1) / 2
    x = col_grid - (cols - 1) / 2
    source_cols = cos_t * x + sin_t * y + (cols - 1) / 2
    source_rows = -sin_t * x + cos_t * y + (rows - 1) / 2

    rotated = np.empty_like(images)
    for start in range(0, count, ROTATION_CHUNK):
        chunk = images[start:start + ROTATION_CHUNK]
        coordinates = np.stack([np.broadcast_to(np.arange(len(chunk))[:, None, None], chunk.shape),
                                np.broadcast_to(source_rows, chunk.shape),
                                np.broadcast_to(source_cols, chunk.shape)])
        rotated[start:start + ROTATION_CHUNK] = map_coordinates(chunk, coordinates, order=1, mode="constant",
                                                                cval=0.0)
    return np.clip(rotated, 0.0, 1.0)


def rotate_image(image, angle_degrees):
    """Rotate one 28x28 image, see rotate_images"""
    return rotate_images(np.asarray(image)[None], angle_degrees)[0]


def _phase_tag(phase):
    if phase not in PHASES:
        raise ValueError(ec.invalid_config("phase", phase, f"phases are {PHASES}"))
    return PHASES.index(phase)


def _assemble(parts, n_classes, scenario, phase, batch_size, seed, angles=None):
    """
    Join per-context (features, targets, class_labels, global_labels) parts into a stream. Training and ordered test
    streams keep contexts in order; an i.i.d. test stream is shuffled across all contexts.
    """
    features = np.concatenate([part[0] for part in parts])
    targets = np.concatenate([part[1] for part in parts])
    class_labels = np.concatenate([part[2] for part in parts])
    global_labels = np.concatenate([part[3] for part in parts])
    context_labels = np.concatenate([np.full(len(part[1]), context) for context, part in enumerate(parts)])

    if phase == "test_iid":
        order = mc.seeded_rng(seed, mc.SHUFFLE_STREAM, _ORDER, _phase_tag(phase)).permutation(len(targets))
        return DataStream(features[order], targets[order], class_labels[order], context_labels[order],
                          global_labels[order], n_classes, scenario, phase, batch_size, False, angles)

    return DataStream(features, targets, class_labels, context_labels, global_labels, n_classes, scenario, phase,
                      batch_size, True, angles)


def build_split_mnist(dataset, batch_size=128, seed=0, phase="train"):
    """
    Five class-incremental contexts of two adjacent digits each, (0, 1), (2, 3), (4, 5), (6, 7) and (8, 9), with the
    order of examples inside each context shuffled by seed. The learning target is the digit.

    :type dataset: MnistDataset
    :rtype: DataStream
    """
    phase_tag = _phase_tag(phase)
    parts = []
    for context, digits in enumerate(SPLIT_MNIST_CONTEXTS):
        members = np.flatnonzero(np.isin(dataset.labels, digits))
        members = members[mc.seeded_rng(seed, mc.SHUFFLE_STREAM, _ORDER, phase_tag, context).permutation(len(members))]
        digit = dataset.labels[members]
        parts.append((dataset.features[members], digit, digit - digits[0], digit))

    return _assemble(parts, 10, "class_incremental", phase, batch_size, seed)


def context_angles(n_contexts, seed):
    """Rotation of each context, drawn uniformly from [-180, 180] degrees; shared by training and test streams"""
    return mc.seeded_rng(seed, mc.SHUFFLE_STREAM, _ANGLES).uniform(-180.0, 180.0, n_contexts).tolist()


def build_rotated_mnist(dataset, n_contexts=5, batch_size=128, seed=0, phase="train", pool="disjoint"):
    """
    Domain-incremental contexts that each rotate their examples by one angle. With the disjoint pool the shuffled
    examples are split evenly between contexts; with the full pool every context holds its own permutation of the
    whole dataset. The learning target is the digit, and the global label is context * 10 + digit.

    :type dataset: MnistDataset
    :rtype: DataStream
    """
    phase_tag = _phase_tag(phase)
    angles = context_angles(n_contexts, seed)
    if pool == "disjoint":
        order = mc.seeded_rng(seed, mc.SHUFFLE_STREAM, _POOL, phase_tag).permutation(len(dataset))
        members_per_context = np.array_split(order, n_contexts)
    elif pool == "full":
        members_per_context = [mc.seeded_rng(seed, mc.SHUFFLE_STREAM, _POOL, phase_tag, context).permutation(
            len(dataset)) for context in range(n_contexts)]
    else:
        raise ValueError(ec.invalid_config("rotated_pool", pool, "the pool is either disjoint or full"))

    parts = []
    for context, (members, angle) in enumerate(zip(members_per_context, angles)):
        digit = dataset.labels[members]
        rotated = rotate_images(dataset.images[members], angle).reshape(len(members), -1)
        parts.append((rotated, digit, digit, context * 10 + digit))

    return _assemble(parts, 10, "domain_incremental", phase, batch_size, seed, angles)


def _distinct_codes(count, d, rng):
    """count distinct binary vectors of length d, so any two cluster means are at least unit distance apart"""
    if d < 63 and count > 2 ** d:
        raise ValueError(ec.invalid_config("d", d, f"too few dimensions for {count} distinct clusters"))

    codes = np.zeros((0, d))
    while len(codes) < count:
        candidates = rng.integers(0, 2, (count, d)).astype(np.float64)
        codes = np.unique(np.vstack([codes, candidates]), axis=0)
    return rng.permutation(codes)[:count]


def build_synthetic(n_contexts, m_classes, d, batch_size=128, seed=0, phase="train", scenario="class_incremental",
                    examples_per_class=256, sigma=0.2):
    """
    Gaussian clusters of standard deviation sigma around distinct binary means, fresh means for every context.
    Class-incremental streams split the m_classes ids between contexts; domain-incremental streams reuse all m_classes
    ids in every context with shifted means. Cluster means are fixed by seed, so train and test streams share them.

    :rtype: DataStream
    """
    for name, value in zip(["n_contexts", "m_classes", "d", "examples_per_class"],
                           [n_contexts, m_classes, d, examples_per_class]):
        if value < 1:
            raise ValueError(ec.invalid_config(name, value, "synthetic stream parameters must be at least 1"))
    if scenario not in SCENARIOS:
        raise ValueError(ec.invalid_config("scenario", scenario, f"scenarios are {SCENARIOS}"))
    if scenario == "class_incremental" and m_classes < n_contexts:
        raise ValueError(ec.invalid_config("m_classes", m_classes, "every context needs at least one class"))

    phase_tag = _phase_tag(phase)
    if scenario == "class_incremental":
        classes_per_context = [ids.tolist() for ids in np.array_split(np.arange(m_classes), n_contexts)]
    else:
        classes_per_context = [list(range(m_classes)) for _ in range(n_contexts)]

    means = _distinct_codes(sum(len(ids) for ids in classes_per_context), d,
                            mc.seeded_rng(seed, mc.SYNTHETIC_STREAM, 0))

    parts = []
    cluster = 0
    for context, ids in enumerate(classes_per_context):
        rng = mc.seeded_rng(seed, mc.SYNTHETIC_STREAM, 1, phase_tag, context)
        features, targets, class_labels = [], [], []
        for within, class_id in enumerate(ids):
            features.append(means[cluster] + rng.normal(0.0, sigma, (examples_per_class, d)))
            targets.append(np.full(examples_per_class, class_id))
            class_labels.append(np.full(examples_per_class, within))
            cluster += 1

        order = mc.seeded_rng(seed, mc.SHUFFLE_STREAM, _ORDER, phase_tag, context).permutation(
            examples_per_class * len(ids))
        targets = np.concatenate(targets)[order]
        class_labels = np.concatenate(class_labels)[order]
        global_labels = targets if scenario == "class_incremental" else context * m_classes + targets
        parts.append((np.concatenate(features)[order], targets, class_labels, global_labels))

    return _assemble(parts, m_classes, scenario, phase, batch_size, seed)


def build_test_set(dataset, source, mode, batch_size=128, seed=0, **kwargs):
    """
    A held out stream: test_iid is a single pass shuffled across all contexts for static per-context accuracy,
    test_ordered keeps the training context order and batching for prequential evaluation.

    :param dataset: The held out MnistDataset, or None for synthetic streams
    :param source: split_mnist, rotated_mnist or synthetic
    :param kwargs: Extra arguments of the matching builder, for example pool or the synthetic parameters
    """
    if mode not in ("test_iid", "test_ordered"):
        raise ValueError(ec.invalid_config("mode", mode, "test sets are test_iid or test_ordered"))

    if source == "split_mnist":
        return build_split_mnist(dataset, batch_size, seed, mode)
    elif source == "rotated_mnist":
        return build_rotated_mnist(dataset, kwargs.get("n_contexts", 5), batch_size, seed, mode,
                                   kwargs.get("pool", "disjoint"))
    elif source == "synthetic":
        return build_synthetic(batch_size=batch_size, seed=seed, phase=mode, **kwargs)
    else:
        raise ValueError(ec.invalid_config("dataset", source, "datasets are split_mnist, rotated_mnist or synthetic"))
