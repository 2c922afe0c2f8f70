import sys

import numpy as np

from beamsep.net.model import mse_loss


def pytest_terminal_summary(terminalreporter):
    # Re-emit the acceptance verdict lines after the test table; the default
    # output capture hides per-test prints for passing tests, and these lines
    # carry the measured values either way.
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "_CRITERION_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def model_gradcheck(model, b0, b1, target, step=1e-4):
    """Max relative error between analytic and central-difference gradients,
    over every trainable parameter entry. Relative error uses
    |fd - an| / max(|fd|, |an|, 1e-8)."""
    pred = model.forward(b0, b1, training=True)
    _, grad = mse_loss(pred, target)
    model.backward(grad)
    analytic = {
        name: getattr(layer, "d" + attr).copy()
        for name, layer, attr in model.parameters()
    }

    def loss_value():
        return mse_loss(model.forward(b0, b1, training=True), target)[0]

    worst = 0.0
    for name, layer, attr in model.parameters():
        arr = getattr(layer, attr)
        an = analytic[name]
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + step
            up = loss_value()
            arr[ix] = orig - step
            down = loss_value()
            arr[ix] = orig
            fd = (up - down) / (2.0 * step)
            rel = abs(fd - an[ix]) / max(abs(fd), abs(an[ix]), 1e-8)
            worst = max(worst, rel)
    return worst
