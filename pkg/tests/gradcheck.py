"""Central finite-difference oracle shared by the gradient tests."""
import numpy as np

STEP = 1e-5


def numeric_grad(f, x, step=STEP):
    """d f / d x by central differences; ``f`` returns a scalar and may read ``x`` in place."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + step
        fp = f()
        x[i] = old - step
        fm = f()
        x[i] = old
        g[i] = (fp - fm) / (2 * step)
    return g


def rel_error(analytic, numeric):
    """Largest elementwise deviation, relative to the larger gradient's max magnitude."""
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def _away_from_kink(x, margin=1e-3):
    """Push entries off zero so ReLU is differentiable at every probe point."""
    return np.where(np.abs(x) < margin, np.sign(x + 1e-300) * margin + x, x)


def check_conv(rng):
    from wiid.nn import conv_backward, conv_forward

    b, c, f = (int(v) for v in rng.integers(1, 4, 3))
    kh, kw = int(rng.integers(1, 3)), int(rng.integers(1, 4))
    h, w = kh + int(rng.integers(0, 3)), kw + int(rng.integers(0, 4))
    x = rng.standard_normal((b, c, h, w))
    k = rng.standard_normal((f, c, kh, kw))
    bias = rng.standard_normal(f)
    r = rng.standard_normal((b, f, h - kh + 1, w - kw + 1))
    loss = lambda: float(np.sum(conv_forward(x, k, bias) * r))  # noqa: E731
    dx, dk, db = conv_backward(r, x, k)
    return max(rel_error(dx, numeric_grad(loss, x)),
               rel_error(dk, numeric_grad(loss, k)),
               rel_error(db, numeric_grad(loss, bias)))


def check_dense(rng):
    from wiid.nn import dense_backward, dense_forward

    b, n_in, n_out = (int(v) for v in rng.integers(1, 7, 3))
    x = rng.standard_normal((b, n_in))
    w = rng.standard_normal((n_out, n_in))
    bias = rng.standard_normal(n_out)
    r = rng.standard_normal((b, n_out))
    loss = lambda: float(np.sum(dense_forward(x, w, bias) * r))  # noqa: E731
    dx, dw, db = dense_backward(r, x, w)
    return max(rel_error(dx, numeric_grad(loss, x)),
               rel_error(dw, numeric_grad(loss, w)),
               rel_error(db, numeric_grad(loss, bias)))


def check_relu(rng):
    from wiid.nn import relu_backward, relu_forward

    x = _away_from_kink(rng.standard_normal(tuple(int(v) for v in rng.integers(1, 5, 3))))
    r = rng.standard_normal(x.shape)
    loss = lambda: float(np.sum(relu_forward(x) * r))  # noqa: E731
    return rel_error(relu_backward(r, x), numeric_grad(loss, x))


def check_dropout(rng):
    from wiid.nn.layers import Dropout

    layer = Dropout(float(rng.uniform(0.0, 0.9)))
    x = rng.standard_normal((int(rng.integers(1, 5)), int(rng.integers(1, 9))))
    r = rng.standard_normal(x.shape)
    seed = int(rng.integers(2**32))
    loss = lambda: float(np.sum(layer.forward(x, train=True, rng=np.random.default_rng(seed)) * r))  # noqa: E731
    loss()
    analytic = layer.backward(r)
    return rel_error(analytic, numeric_grad(loss, x))


def check_flatten(rng):
    from wiid.nn.layers import Flatten

    layer = Flatten()
    x = rng.standard_normal(tuple(int(v) for v in rng.integers(1, 4, 4)))
    r = rng.standard_normal((x.shape[0], int(np.prod(x.shape[1:]))))
    loss = lambda: float(np.sum(layer.forward(x) * r))  # noqa: E731
    loss()
    return rel_error(layer.backward(r), numeric_grad(loss, x))


def check_sigmoid(rng):
    from wiid.nn.layers import Sigmoid

    layer = Sigmoid()
    x = 3 * rng.standard_normal((int(rng.integers(1, 5)), int(rng.integers(1, 16))))
    r = rng.standard_normal(x.shape)
    loss = lambda: float(np.sum(layer.forward(x) * r))  # noqa: E731
    loss()
    return rel_error(layer.backward(r), numeric_grad(loss, x))


def check_softmax(rng):
    from wiid.nn.layers import Softmax

    layer = Softmax()
    x = 2 * rng.standard_normal((int(rng.integers(1, 5)), int(rng.integers(2, 16))))
    r = rng.standard_normal(x.shape)
    loss = lambda: float(np.sum(layer.forward(x) * r))  # noqa: E731
    loss()
    return rel_error(layer.backward(r), numeric_grad(loss, x))


def check_bce(rng):
    from wiid.nn import bce_loss

    shape = (int(rng.integers(1, 5)), 15)
    p = rng.uniform(0.05, 0.95, shape)
    t = (rng.random(shape) < 0.3).astype(float)
    loss = lambda: bce_loss(p, t)[0]  # noqa: E731
    return rel_error(bce_loss(p, t)[1], numeric_grad(loss, p, step=1e-6))


def check_cce(rng):
    from wiid.nn import categorical_cross_entropy, softmax

    p = softmax(rng.standard_normal((int(rng.integers(1, 5)), 15)))
    t = np.eye(15)[rng.integers(0, 15, p.shape[0])]
    loss = lambda: categorical_cross_entropy(p, t)[0]  # noqa: E731
    return rel_error(categorical_cross_entropy(p, t)[1], numeric_grad(loss, p, step=1e-7))


CHECKS = {
    "conv": check_conv,
    "dense": check_dense,
    "relu": check_relu,
    "dropout": check_dropout,
    "flatten": check_flatten,
    "sigmoid": check_sigmoid,
    "softmax": check_softmax,
    "bce": check_bce,
    "cce": check_cce,
}
