"""Small reverse-mode autodiff over float64 numpy arrays.

Covers exactly the operations the models need: broadcast arithmetic,
matmul, sparse-dense matmul, relu, log, sqrt, clamp, softmax, reductions,
indexing, stacking, and a gradient-reversal wrapper. Every tensor tracks
its parents; backward() walks the graph once in reverse topological order.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def _unbroadcast(grad, shape):
    """Sum grad down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "trainable", "_parents", "_backward")

    def __init__(self, data, trainable=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self.trainable = trainable
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    # --- graph walk ---

    def backward(self) -> None:
        if self.data.ndim != 0:
            raise ValidationError("backward() starts from a scalar loss")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # --- arithmetic ---

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data + other.data, parents=(self, other))

        def back():
            self.grad += _unbroadcast(out.grad, self.data.shape)
            other.grad += _unbroadcast(out.grad, other.data.shape)

        out._backward = back
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, parents=(self,))

        def back():
            self.grad += -out.grad

        out._backward = back
        return out

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data * other.data, parents=(self, other))

        def back():
            self.grad += _unbroadcast(out.grad * other.data, self.data.shape)
            other.grad += _unbroadcast(out.grad * self.data, other.data.shape)

        out._backward = back
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data / other.data, parents=(self, other))

        def back():
            self.grad += _unbroadcast(out.grad / other.data, self.data.shape)
            other.grad += _unbroadcast(
                -out.grad * self.data / (other.data * other.data),
                other.data.shape,
            )

        out._backward = back
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self.data, other.data
        out = Tensor(a @ b, parents=(self, other))

        def back():
            g = out.grad
            if a.ndim == 2 and b.ndim == 2:
                self.grad += g @ b.T
                other.grad += a.T @ g
            elif a.ndim == 1 and b.ndim == 2:
                self.grad += b @ g
                other.grad += np.outer(a, g)
            elif a.ndim == 2 and b.ndim == 1:
                self.grad += np.outer(g, b)
                other.grad += a.T @ g
            elif a.ndim == 1 and b.ndim == 1:
                self.grad += g * b
                other.grad += g * a
            else:
                raise ValidationError(
                    f"unsupported matmul ranks {a.ndim} x {b.ndim}"
                )

        out._backward = back
        return out

    # --- elementwise nonlinearities ---

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), parents=(self,))

        def back():
            self.grad += out.grad * (self.data > 0)

        out._backward = back
        return out

    def log(self):
        out = Tensor(np.log(self.data), parents=(self,))

        def back():
            self.grad += out.grad / self.data

        out._backward = back
        return out

    def sqrt(self):
        root = np.sqrt(self.data)
        out = Tensor(root, parents=(self,))

        def back():
            self.grad += out.grad / (2.0 * root)

        out._backward = back
        return out

    def clamp(self, lo=None, hi=None):
        """Clip values; gradient passes only through unclipped entries."""
        clipped = np.clip(self.data, lo, hi)
        inside = np.ones_like(self.data, dtype=bool)
        if lo is not None:
            inside &= self.data >= lo
        if hi is not None:
            inside &= self.data <= hi
        out = Tensor(clipped, parents=(self,))

        def back():
            self.grad += out.grad * inside

        out._backward = back
        return out

    def softmax(self):
        """Softmax over the last axis, numerically shifted."""
        shifted = self.data - self.data.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=-1, keepdims=True)
        out = Tensor(y, parents=(self,))

        def back():
            g = out.grad
            inner = (g * y).sum(axis=-1, keepdims=True)
            self.grad += y * (g - inner)

        out._backward = back
        return out

    # --- reductions / shaping ---

    def sum(self, axis=None):
        out = Tensor(self.data.sum(axis=axis), parents=(self,))

        def back():
            g = out.grad
            if axis is not None:
                g = np.expand_dims(g, axis)
            self.grad += np.broadcast_to(g, self.data.shape)

        out._backward = back
        return out

    def mean(self, axis=None):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis) / float(count)

    def __getitem__(self, idx):
        out = Tensor(self.data[idx], parents=(self,))

        def back():
            np.add.at(self.grad, idx, out.grad)

        out._backward = back
        return out


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), trainable=True)


def stack(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.stack([t.data for t in tensors], axis=axis), parents=tuple(tensors))

    def back():
        pieces = np.split(out.grad, len(tensors), axis=axis)
        for t, piece in zip(tensors, pieces):
            t.grad += piece.reshape(t.data.shape)

    out._backward = back
    return out


def spmm(sparse, dense: Tensor) -> Tensor:
    """Sparse (constant) @ dense (differentiable)."""
    out = Tensor(sparse @ dense.data, parents=(dense,))
    transpose = sparse.T.tocsr()

    def back():
        dense.grad += transpose @ out.grad

    out._backward = back
    return out


def grl(t: Tensor, beta: float = 1.0) -> Tensor:
    """Identity forward; backward multiplies the gradient by -beta."""
    out = Tensor(t.data, parents=(t,))

    def back():
        t.grad += -beta * out.grad

    out._backward = back
    return out


def dot(u: Tensor, v: Tensor) -> Tensor:
    return (u * v).sum()
