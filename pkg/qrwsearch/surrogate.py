"""Dense feed-forward surrogate of the success probability

The network maps ``(phi, zeta)`` or ``(phi, zeta, n)`` to ``p``. Hidden layers use
the scaled exponential linear unit, the single output a logistic sigmoid. Inputs
are scaled internally (angles by ``2 pi``, ``n`` by 8), so callers always pass raw
radians and qubit counts.

Training minimizes mean squared error with Adam on mini-batches, keeps the
parameters of the epoch with the lowest validation loss and stops early once the
validation loss has not improved for ``patience`` epochs.
"""
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from qrwsearch.errors import FormatError, QrwsError, TrainingError, ValidationError
from qrwsearch.sweep import Dataset, grid_axis


SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772
INPUT_SCALES = (2.0 * math.pi, 2.0 * math.pi, 8.0)
MODEL_FORMAT = "qrwsearch-mlp"
MODEL_FORMAT_VERSION = 1
TRAINED_QUBITS = (1, 2, 3)
# predictions stay this far inside (0, 1) where the sigmoid saturates
OUTPUT_MARGIN = 1e-12


logger = logging.getLogger(__name__)


@dataclass
class MlpModel:
    """Weights of a dense network with ``hidden_layers`` layers of ``neurons`` units

    Attributes:
        input_dim: 2 for ``(phi, zeta)``, 3 for ``(phi, zeta, n)``
        hidden_layers: Number of SELU layers (``L``)
        neurons: Units per hidden layer (``N``)
        weights: One ``(fan_in, fan_out)`` matrix per layer, output layer last
        biases: One vector per layer, output layer last
        metadata: Free-form provenance (seed, n, best validation loss, optimizer)
    """

    input_dim: int
    hidden_layers: int
    neurons: int
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def shapes(self) -> List[Tuple[int, int]]:
        sizes = [self.input_dim] + [self.neurons] * self.hidden_layers + [1]
        return list(zip(sizes[:-1], sizes[1:]))

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.input_dim,
            self.hidden_layers,
            self.neurons,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            dict(self.metadata),
        )


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch training settings

    Attributes:
        epochs: Upper bound on passes over the training set
        batch_size: Examples per gradient step
        learning_rate: Adam step size
        patience: Epochs without validation improvement before stopping
        train_fraction: Share of examples used for training, the rest validates
        seed: Seeds the initialization, the split and the batch order
    """

    epochs: int = 500
    batch_size: int = 256
    learning_rate: float = 1e-3
    patience: int = 50
    train_fraction: float = 0.8
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}",
                module="surrogate",
                kind="config",
            )
        if self.batch_size < 1 or self.epochs < 1 or self.patience < 1:
            raise ValidationError(
                "epochs, batch_size and patience must all be >= 1",
                module="surrogate",
                kind="config",
            )
        if not self.learning_rate > 0:
            raise ValidationError(
                f"learning_rate must be > 0, got {self.learning_rate}",
                module="surrogate",
                kind="config",
            )


@dataclass
class TrainReport:
    train_loss: List[float]
    val_loss: List[float]
    best_epoch: int

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch]


def selu(z: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(z > 0, z, SELU_ALPHA * np.expm1(np.minimum(z, 0)))


def selu_derivative(z: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(z > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(z, 0)))


def init_model(input_dim: int, hidden_layers: int, neurons: int, seed: int) -> MlpModel:
    """Random network with ``N(0, 1/fan_in)`` weights and zero biases"""
    if input_dim not in (2, 3):
        raise ValidationError(
            f"input_dim must be 2 or 3, got {input_dim}",
            module="surrogate",
            kind="shape",
        )
    if hidden_layers < 1 or neurons < 1:
        raise ValidationError(
            f"Need at least one layer and one neuron, got L={hidden_layers}, "
            f"N={neurons}",
            module="surrogate",
            kind="shape",
        )

    rng = np.random.default_rng(seed)
    model = MlpModel(input_dim, hidden_layers, neurons, [], [], {"seed": seed})
    for fan_in, fan_out in model.shapes():
        scale = 1.0 / math.sqrt(fan_in)
        model.weights.append(rng.normal(0.0, scale, (fan_in, fan_out)))
        model.biases.append(np.zeros(fan_out))
    return model


def scale_inputs(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != model.input_dim:
        raise ValidationError(
            f"Model takes {model.input_dim} inputs, got {inputs.shape[1]}",
            module="surrogate",
            kind="shape",
        )
    return inputs / np.array(INPUT_SCALES[: model.input_dim])


def _forward_pass(model: MlpModel, scaled: np.ndarray):
    activations = [scaled]
    pre_activations = []
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = activations[-1] @ w + b
        pre_activations.append(z)
        activations.append(selu(z))
    output = expit(activations[-1] @ model.weights[-1] + model.biases[-1])
    return output[:, 0], activations, pre_activations


def predict(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    """Predictions for a ``(B, input_dim)`` array of raw inputs, inside ``(0, 1)``"""
    output, _, _ = _forward_pass(model, scale_inputs(model, inputs))
    return np.clip(output, OUTPUT_MARGIN, 1.0 - OUTPUT_MARGIN)


def forward(model: MlpModel, inputs: Sequence[float]) -> float:
    """Prediction for one raw input vector"""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 1:
        raise ValidationError(
            f"Expected one input vector, got shape {inputs.shape}",
            module="surrogate",
            kind="shape",
        )
    return float(predict(model, inputs[np.newaxis, :])[0])


def loss_and_gradient(
    model: MlpModel, scaled: np.ndarray, targets: np.ndarray
) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """Mean squared error and its gradient by reverse-mode differentiation

    Args:
        model: The network
        scaled: ``(B, input_dim)`` inputs already passed through :func:`scale_inputs`
        targets: ``(B,)`` target probabilities

    Returns:
        ``(loss, weight_gradients, bias_gradients)`` in layer order
    """
    output, activations, pre_activations = _forward_pass(model, scaled)
    residual = output - targets
    loss = float(np.mean(residual ** 2))

    # d loss / d output-logit, through the sigmoid
    delta = (2.0 / len(targets) * residual * output * (1.0 - output))[:, np.newaxis]
    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer:
            delta = (delta @ model.weights[layer].T) * selu_derivative(
                pre_activations[layer - 1]
            )

    return loss, grad_w, grad_b


def _training_arrays(
    datasets: Union[Dataset, Sequence[Dataset]], input_dim: int
) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    inputs, targets, qubits = [], [], []
    for dataset in datasets:
        phi, zeta, p = dataset.arrays()
        columns = [phi, zeta]
        if input_dim == 3:
            columns.append(np.array([r.n for r in dataset.records], dtype=float))
        inputs.append(np.column_stack(columns))
        targets.append(p)
        qubits.extend(sorted({r.n for r in dataset.records}))

    if not inputs or sum(len(t) for t in targets) < 2:
        raise ValidationError(
            "Training needs at least two records", module="surrogate", kind="data"
        )
    if input_dim == 2 and len(set(qubits)) > 1:
        raise ValidationError(
            f"A two-input model cannot mix coin sizes {sorted(set(qubits))}",
            module="surrogate",
            kind="data",
        )
    return np.concatenate(inputs), np.concatenate(targets), sorted(set(qubits))


def _mse(model: MlpModel, scaled: np.ndarray, targets: np.ndarray) -> float:
    output, _, _ = _forward_pass(model, scaled)
    return float(np.mean((output - targets) ** 2))


def train(
    datasets: Union[Dataset, Sequence[Dataset]],
    input_dim: int,
    hidden_layers: int,
    neurons: int,
    config: Optional[TrainConfig] = None,
) -> Tuple[MlpModel, TrainReport]:
    """Fit a surrogate to sweep data

    Args:
        datasets: One dataset, or several (one per ``n``) for a three-input model
        input_dim: 2 or 3
        hidden_layers: Number of hidden layers ``L``
        neurons: Neurons per hidden layer ``N``
        config (optional): Training settings

    Returns:
        The parameters of the epoch with the lowest validation loss, and the
        per-epoch loss history
    """
    config = config or TrainConfig()
    inputs, targets, qubits = _training_arrays(datasets, input_dim)
    model = init_model(input_dim, hidden_layers, neurons, config.seed)
    scaled = scale_inputs(model, inputs)

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(targets))
    n_train = int(round(config.train_fraction * len(order)))
    n_train = min(max(n_train, 1), len(order) - 1)
    train_idx, val_idx = order[:n_train], order[n_train:]

    first = [np.zeros_like(w) for w in model.weights + model.biases]
    second = [np.zeros_like(w) for w in model.weights + model.biases]
    updates = 0

    best_model = model.copy()
    best_epoch = 0
    train_history: List[float] = []
    val_history: List[float] = []

    for epoch in range(config.epochs):
        shuffled = rng.permutation(train_idx)
        for start in range(0, len(shuffled), config.batch_size):
            batch = shuffled[start : start + config.batch_size]
            loss, grad_w, grad_b = loss_and_gradient(
                model, scaled[batch], targets[batch]
            )
            if not math.isfinite(loss):
                raise TrainingError(
                    f"Loss became {loss} at epoch {epoch}, batch starting {start}",
                    module="surrogate",
                )

            updates += 1
            parameters = model.weights + model.biases
            for i, (param, grad) in enumerate(zip(parameters, grad_w + grad_b)):
                first[i] = config.beta1 * first[i] + (1 - config.beta1) * grad
                second[i] = config.beta2 * second[i] + (1 - config.beta2) * grad ** 2
                m_hat = first[i] / (1 - config.beta1 ** updates)
                v_hat = second[i] / (1 - config.beta2 ** updates)
                step = m_hat / (np.sqrt(v_hat) + config.epsilon)
                param -= config.learning_rate * step

        train_loss = _mse(model, scaled[train_idx], targets[train_idx])
        val_loss = _mse(model, scaled[val_idx], targets[val_idx])
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise TrainingError(
                f"Loss became non-finite after epoch {epoch}", module="surrogate"
            )
        train_history.append(train_loss)
        val_history.append(val_loss)
        logger.debug(f"epoch {epoch}: train {train_loss:.3e} validation {val_loss:.3e}")

        if val_loss < val_history[best_epoch] or epoch == 0:
            best_epoch = epoch
            best_model = model.copy()
        elif epoch - best_epoch >= config.patience:
            logger.debug(f"Stopping early after epoch {epoch}")
            break

    report = TrainReport(train_history, val_history, best_epoch)
    best_model.metadata.update(
        {
            "seed": config.seed,
            "n": qubits,
            "best_epoch": best_epoch,
            "best_val_loss": report.best_val_loss,
            "optimizer": {
                "name": "adam",
                "learning_rate": config.learning_rate,
                "beta1": config.beta1,
                "beta2": config.beta2,
            },
        }
    )

    logger.info(
        f"Trained L={hidden_layers} N={neurons} on n={qubits}: best validation "
        f"loss {report.best_val_loss:.3e} at epoch {best_epoch}"
    )
    return best_model, report


def grid_search(
    datasets: Union[Dataset, Sequence[Dataset]],
    layer_range: Sequence[int],
    neuron_range: Sequence[int],
    config: Optional[TrainConfig] = None,
    input_dim: int = 2,
) -> np.ndarray:
    """Best validation loss of a short training run for every ``(L, N)`` cell

    Returns:
        A ``(len(layer_range), len(neuron_range))`` array; cells whose training
        failed hold NaN
    """
    if not layer_range or not neuron_range:
        raise ValidationError(
            "Layer and neuron ranges must be non-empty",
            module="surrogate",
            kind="config",
        )

    losses = np.full((len(layer_range), len(neuron_range)), np.nan)
    for i, layers in enumerate(layer_range):
        for j, neurons in enumerate(neuron_range):
            try:
                _, report = train(datasets, input_dim, layers, neurons, config)
            except (QrwsError, FloatingPointError) as error:
                logger.warning(f"Cell L={layers} N={neurons} failed: {error}")
                continue
            losses[i, j] = report.best_val_loss
            logger.debug(f"Cell L={layers} N={neurons}: {losses[i, j]:.3e}")

    return losses


def predict_p(
    model: MlpModel, phi: float, zeta: float, n: Optional[int] = None
) -> float:
    """Predicted success probability at raw angles (and ``n`` for 3-input models)"""
    if model.input_dim == 3 and n is None:
        raise ValidationError(
            "This model takes n as an input", module="surrogate", kind="input"
        )
    if model.input_dim == 2 and n is not None:
        raise ValidationError(
            "This model was trained for a single n and takes no n input",
            module="surrogate",
            kind="input",
        )
    if n is None:
        return forward(model, [phi, zeta])

    if n not in model.metadata.get("n", TRAINED_QUBITS):
        logger.warning(f"n={n} lies outside the training data; prediction is advisory")
    return forward(model, [phi, zeta, n])


def _to_document(model: MlpModel) -> Dict[str, Any]:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "input_dim": model.input_dim,
        "hidden_layers": model.hidden_layers,
        "neurons": model.neurons,
        "activations": {"hidden": "selu", "output": "sigmoid"},
        "selu": {"lambda": SELU_LAMBDA, "alpha": SELU_ALPHA},
        "input_scaling": list(INPUT_SCALES[: model.input_dim]),
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
        "metadata": model.metadata,
    }


def save_model(model: MlpModel, path: Path):
    path = Path(path)
    path.write_text(json.dumps(_to_document(model), indent=1), encoding="utf-8")
    logger.info(f"Saved model L={model.hidden_layers} N={model.neurons} to {path}")


def load_model(path: Path) -> MlpModel:
    """Read a model written by :func:`save_model`, checking format and shapes"""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise FormatError(f"{path}: not a model document ({error})", module="surrogate")

    if not isinstance(document, dict) or document.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: not a {MODEL_FORMAT} document", module="surrogate")
    if document.get("version") != MODEL_FORMAT_VERSION:
        raise FormatError(
            f"{path}: format version {document.get('version')} is not "
            f"{MODEL_FORMAT_VERSION}",
            module="surrogate",
            kind="version",
        )

    try:
        layers = document["layers"]
        model = MlpModel(
            input_dim=int(document["input_dim"]),
            hidden_layers=int(document["hidden_layers"]),
            neurons=int(document["neurons"]),
            weights=[np.array(layer["weights"], dtype=float) for layer in layers],
            biases=[np.array(layer["bias"], dtype=float) for layer in layers],
            metadata=dict(document.get("metadata", {})),
        )
    except (KeyError, TypeError, ValueError) as error:
        raise FormatError(f"{path}: incomplete model ({error})", module="surrogate")

    expected = model.shapes()
    actual = [(w.shape, b.shape) for w, b in zip(model.weights, model.biases)]
    if len(actual) != len(expected) or any(
        w != shape or b != (shape[1],) for (w, b), shape in zip(actual, expected)
    ):
        raise FormatError(
            f"{path}: layer shapes {actual} do not match input_dim="
            f"{model.input_dim}, L={model.hidden_layers}, N={model.neurons}",
            module="surrogate",
            kind="shape",
        )

    return model


def save_history(report: TrainReport, path: Path):
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, (train_loss, val_loss) in enumerate(
            zip(report.train_loss, report.val_loss)
        ):
            writer.writerow([epoch, f"{train_loss:.17g}", f"{val_loss:.17g}"])


def save_grid(
    losses: np.ndarray,
    layer_range: Sequence[int],
    neuron_range: Sequence[int],
    path: Path,
):
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["L", "N", "val_loss"])
        for i, layers in enumerate(layer_range):
            for j, neurons in enumerate(neuron_range):
                loss = losses[i, j]
                cell = "" if np.isnan(loss) else f"{loss:.17g}"
                writer.writerow([layers, neurons, cell])


def prediction_grid(
    model: MlpModel, resolution: int, n: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Predicted ``p`` on a ``resolution x resolution`` grid, zeta in the outer loop

    Returns:
        Flat ``(phi, zeta, p)`` arrays in row order
    """
    if resolution < 2:
        raise ValidationError(
            f"Grid resolution must be >= 2, got {resolution}",
            module="surrogate",
            kind="resolution",
        )
    predict_p(model, 0.0, 0.0, n)

    axis = grid_axis(resolution)
    zeta_mesh, phi_mesh = np.meshgrid(axis, axis, indexing="ij")
    phis, zetas = phi_mesh.reshape(-1), zeta_mesh.reshape(-1)
    columns = [phis, zetas] + ([np.full(phis.size, float(n))] if n is not None else [])
    return phis, zetas, predict(model, np.column_stack(columns))


def save_prediction_grid(
    phis: np.ndarray, zetas: np.ndarray, p: np.ndarray, n: int, path: Path
):
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["phi", "zeta", "n", "p"])
        for phi, zeta, value in zip(phis, zetas, p):
            writer.writerow([f"{phi:.17g}", f"{zeta:.17g}", n, f"{value:.17g}"])
    logger.info(f"Wrote {len(p)} predictions to {path}")
