"""Line-oriented text format for trained classifiers.

::

    notimind-model 1
    kind svm
    columns k_a e_a ...
    normalizer.mean <floats>
    normalizer.scale <floats>
    param <name> <value>
    array <name> <shape...> : <floats>

Floats are written with ``repr`` so a load reproduces predictions exactly.
"""

import io

import numpy as np

from ._base import CLASSES
from .linear import SoftmaxRegression
from .neural import PARAM_NAMES, FeedForwardNet
from .preprocessing import Normalizer
from .svm import PairModel, RbfSVC

MAGIC = "notimind-model"
VERSION = 1
_KINDS = {FeedForwardNet: "ann", RbfSVC: "svm", SoftmaxRegression: "lr"}


def _floats(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


def _array_line(name, arr):
    arr = np.asarray(arr, dtype=float)
    shape = " ".join(str(s) for s in arr.shape)
    return f"array {name} {shape} : {_floats(arr)}"


def dumps(model, normalizer, columns):
    kind = _KINDS[type(model)]
    lines = [
        f"{MAGIC} {VERSION}",
        f"kind {kind}",
        "columns " + " ".join(columns),
        "classes " + " ".join(str(int(c)) for c in CLASSES),
        f"normalizer.mean {_floats(normalizer.mean_)}",
        f"normalizer.scale {_floats(normalizer.scale_)}",
    ]
    if kind == "lr":
        lines.append(_array_line("weights", model.weights_))
        lines.append(_array_line("bias", model.bias_))
    elif kind == "ann":
        lines.append(f"param hidden_size {model.hidden_size_}")
        lines.extend(_array_line(name, model.params_[name]) for name in PARAM_NAMES)
    else:
        lines.append(f"param gamma {model.gamma_!r}")
        lines.append(f"param C {float(model.C)!r}")
        lines.append("param present " + ",".join(str(int(c)) for c in model.present_classes_))
        for i, pm in enumerate(model.pairs_):
            lines.append(f"param pair{i} {pm.positive},{pm.negative},{pm.bias!r}")
            sv = pm.support_vectors.reshape(len(pm.dual_coef), model.n_features_in_)
            lines.append(_array_line(f"pair{i}.sv", sv))
            lines.append(_array_line(f"pair{i}.coef", pm.dual_coef))
    return "\n".join(lines) + "\n"


def _parse_array(rest):
    head, _, data = rest.partition(" : ")
    parts = head.split()
    name, shape = parts[0], tuple(int(s) for s in parts[1:])
    values = np.array([float(v) for v in data.split()], dtype=float) if data.strip() else np.empty(0)
    return name, values.reshape(shape)


def loads(text):
    """Return ``(model, normalizer, columns)`` from :func:`dumps` output."""
    lines = [line for line in text.splitlines() if line.strip()]
    magic, version = lines[0].split()
    if magic != MAGIC or int(version) != VERSION:
        raise ValueError(f"not a version-{VERSION} notimind model file")
    header, params, arrays = {}, {}, {}
    for line in lines[1:]:
        key, _, rest = line.partition(" ")
        if key == "param":
            name, _, value = rest.partition(" ")
            params[name] = value
        elif key == "array":
            name, value = _parse_array(rest)
            arrays[name] = value
        else:
            header[key] = rest
    columns = tuple(header["columns"].split())
    normalizer = Normalizer(columns=columns)
    normalizer.mean_ = np.array([float(v) for v in header["normalizer.mean"].split()])
    normalizer.scale_ = np.array([float(v) for v in header["normalizer.scale"].split()])
    normalizer.n_features_in_ = len(columns)

    kind = header["kind"]
    if kind == "lr":
        model = SoftmaxRegression()
        model.weights_, model.bias_ = arrays["weights"], arrays["bias"]
    elif kind == "ann":
        model = FeedForwardNet(hidden_size=int(params["hidden_size"]))
        model.hidden_size_ = int(params["hidden_size"])
        model.params_ = {name: arrays[name] for name in PARAM_NAMES}
    elif kind == "svm":
        model = RbfSVC(C=float(params["C"]), gamma=float(params["gamma"]))
        model.gamma_ = float(params["gamma"])
        model.present_classes_ = np.array([int(c) for c in params["present"].split(",")])
        model.pairs_ = []
        i = 0
        while f"pair{i}" in params:
            pos, neg, bias = params[f"pair{i}"].split(",")
            model.pairs_.append(PairModel(int(pos), int(neg), arrays[f"pair{i}.sv"],
                                          arrays[f"pair{i}.coef"], float(bias)))
            i += 1
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    model.classes_ = CLASSES
    model.n_features_in_ = len(columns)
    return model, normalizer, columns


def save_model(path, model, normalizer, columns):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model, normalizer, columns))


def load_model(path):
    with io.open(path, encoding="utf-8") as fh:
        return loads(fh.read())
