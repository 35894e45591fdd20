"""Dense arrays and the reverse-mode tape.

Every differentiable op produces a new :class:`Array`; when any input requires
a gradient the op also records a :class:`Node` carrying its backward rule.
Nodes carry a global sequence number, so sorting the nodes reachable from a
loss by that number recovers execution order, and :func:`backward` walks it
in reverse, visiting each node once.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32

_sequence = itertools.count()


class ShapeError(ValueError):
    """Raised when op operands have incompatible shapes."""


class NonFiniteError(FloatingPointError):
    """Raised when an op produces NaN or Inf."""


class Node:
    __slots__ = ("seq", "op", "inputs", "backward_fn", "out_id")

    def __init__(self, op: str, inputs: tuple, backward_fn: Callable):
        self.seq = next(_sequence)
        self.op = op
        self.inputs = inputs
        self.backward_fn = backward_fn
        self.out_id = 0

    def __repr__(self) -> str:
        return f"Node(seq={self.seq}, op={self.op!r})"


class Array:
    """An immutable float array that may take part in differentiation.

    Floating data is stored as float32 unless ``dtype`` says otherwise;
    float64 arrays are used by the gradient checker and propagate through
    every op by numpy's promotion rules.
    """

    __slots__ = ("data", "requires_grad", "grad", "_node", "name", "__weakref__")
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: Optional[str] = None):
        arr = np.array(data, dtype=dtype or DEFAULT_DTYPE, copy=True)
        if any(n < 1 for n in arr.shape):
            raise ShapeError(f"Array: every extent must be >= 1, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteError("Array: input data contains NaN or Inf")
        arr.flags.writeable = False
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._node: Optional[Node] = None
        self.name = name

    @classmethod
    def _wrap(cls, data: np.ndarray, node: Optional[Node]) -> "Array":
        out = cls.__new__(cls)
        data = np.asarray(data)
        data.flags.writeable = False
        out.data = data
        out.requires_grad = node is not None
        out.grad = None
        out._node = node
        out.name = None
        if node is not None:
            node.out_id = id(out)
        return out

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> "Array":
        return _ops.transpose(self)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _not_scalar(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Array(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # operator sugar; all of these route through ndcore.ops
    def __add__(self, other):
        return _ops.add(self, other)

    def __radd__(self, other):
        return _ops.add(other, self)

    def __sub__(self, other):
        return _ops.sub(self, other)

    def __rsub__(self, other):
        return _ops.sub(other, self)

    def __mul__(self, other):
        return _ops.mul(self, other)

    def __rmul__(self, other):
        return _ops.mul(other, self)

    def __truediv__(self, other):
        return _ops.div(self, other)

    def __neg__(self):
        return _ops.neg(self)

    def __matmul__(self, other):
        return _ops.matmul(self, other)

    def sum(self, axis=None, keepdims: bool = False) -> "Array":
        return _ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Array":
        return _ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Array":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return _ops.reshape(self, shape)


def _not_scalar(a: Array) -> float:
    raise ShapeError(f"item: expected a single element, got shape {a.shape}")


def make_result(op: str, data: np.ndarray, inputs: Sequence[Array], backward_fn: Callable) -> Array:
    """Wrap an op's output, checking finiteness and recording a tape node if needed."""
    if not np.isfinite(data).all():
        raise NonFiniteError(f"{op}: produced NaN or Inf")
    if any(a.requires_grad for a in inputs):
        return Array._wrap(data, Node(op, tuple(inputs), backward_fn))
    return Array._wrap(data, None)


def stop_gradient(a: Array) -> Array:
    """Same values as ``a``; nothing flows back through the result."""
    return Array._wrap(a.data, None)


class Tape:
    """The executed ops that a scalar loss depends on, in execution order."""

    def __init__(self, nodes: list[Node]):
        self.nodes = nodes

    @classmethod
    def of(cls, loss: Array) -> "Tape":
        seen: dict[int, Node] = {}
        stack = [loss]
        while stack:
            node = stack.pop()._node
            if node is None or node.seq in seen:
                continue
            seen[node.seq] = node
            stack.extend(node.inputs)
        return cls([seen[s] for s in sorted(seen)])

    @property
    def ops(self) -> list[str]:
        return [n.op for n in self.nodes]

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Array) -> dict[int, np.ndarray]:
        """Propagate d(loss)/d(·) to every leaf; returns leaf gradients keyed by ``id``."""
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Array] = {}
        for node in reversed(self.nodes):
            g = grads.pop(node.out_id, None)
            if g is None:
                continue
            in_grads = node.backward_fn(g)
            for inp, ig in zip(node.inputs, in_grads):
                if ig is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + ig
                else:
                    grads[key] = ig
                if inp._node is None:
                    leaves[key] = inp
        if loss._node is None and loss.requires_grad:
            leaves[id(loss)] = loss
        out = {}
        for key, leaf in leaves.items():
            g = np.asarray(grads[key], dtype=leaf.dtype).reshape(leaf.shape)
            leaf.grad = g
            out[key] = g
        return out


def backward(loss: Array, params: Optional[Iterable[Array]] = None) -> Optional[list[np.ndarray]]:
    """Reverse-mode gradients of a scalar ``loss``.

    Sets ``.grad`` on every reachable leaf that requires a gradient. If
    ``params`` is given, returns their gradients in order, with zeros for any
    parameter the loss does not depend on.
    """
    if loss.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    leaf_grads = Tape.of(loss).backward(loss)
    if params is None:
        return None
    result = []
    for p in params:
        g = leaf_grads.get(id(p))
        if g is None:
            g = np.zeros_like(p.data)
            p.grad = g
        result.append(g)
    return result


from . import ops as _ops  # noqa: E402  (operator methods dispatch here)
