"""Two-branch dilated temporal convolutional network with bilinear fusion.

Each branch stacks 3-tap conv blocks whose dilation grows 1, 2, 4, 8. A block
is two conv layers (conv -> ReLU -> batch norm, twice) plus a skip connection
from the block input to the second batch-norm output. The branch outputs are
fused per frame (compact bilinear pooling or channel concatenation) and an
output stage (1x1 conv + ReLU, a linear-activation conv block, 1x1 linear
conv) maps the fused map to the estimated magnitude spectrogram. Everything
is fully convolutional: any frame count works at train or test time.
"""

from __future__ import annotations

import numpy as np

from ..sketch import SketchParams, make_sketch_params, sketch_matrix
from .layers import BatchNorm1d, Conv1d, Identity, ReLU

FUSION_MODES = ("cbp", "concat")
INPUT_MODES = ("both", "b0_only", "b1_only")


def mse_loss(pred, target):
    """Mean squared error over every entry; returns (loss, grad wrt pred)."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    grad = (2.0 / diff.size) * diff
    return loss, grad


class ConvBlock:
    """Two conv layers with skip: x + BN2(act(conv2(BN1(act(conv1(x)))))."""

    def __init__(self, channels, dilation, rng, dtype=np.float32, relu=True,
                 taps=3, bn_eps=1e-5, bn_momentum=0.1):
        act = ReLU if relu else Identity
        self.conv1 = Conv1d(channels, channels, taps, dilation, rng, dtype)
        self.act1 = act()
        self.bn1 = BatchNorm1d(channels, bn_eps, bn_momentum, dtype)
        self.conv2 = Conv1d(channels, channels, taps, dilation, rng, dtype)
        self.act2 = act()
        self.bn2 = BatchNorm1d(channels, bn_eps, bn_momentum, dtype)
        self.dilation = int(dilation)
        self.taps = int(taps)

    def forward(self, x, training=True):
        h = self.conv1.forward(x, training)
        h = self.act1.forward(h, training)
        h = self.bn1.forward(h, training)
        h = self.conv2.forward(h, training)
        h = self.act2.forward(h, training)
        h = self.bn2.forward(h, training)
        return x + h

    def backward(self, grad):
        h = self.bn2.backward(grad)
        h = self.act2.backward(h)
        h = self.conv2.backward(h)
        h = self.bn1.backward(h)
        h = self.act1.backward(h)
        h = self.conv1.backward(h)
        return grad + h

    def named_layers(self, prefix):
        return [
            (f"{prefix}.conv1", self.conv1),
            (f"{prefix}.bn1", self.bn1),
            (f"{prefix}.conv2", self.conv2),
            (f"{prefix}.bn2", self.bn2),
        ]


def _project(x, m):
    """Channel projection of (batch, C, F) by (D, C): returns (batch, D, F)."""
    return np.moveaxis(np.tensordot(m, x, axes=([1], [1])), 0, 1)


class CbpFusion:
    """Per-frame compact bilinear pooling of the two branch outputs.

    The sketch of the outer product of the two channel vectors is the
    circular convolution of their individual sketches, done with FFTs along
    the channel axis. Hash and sign parameters are drawn once at model
    construction and live with the model.
    """

    def __init__(self, pu: SketchParams, pw: SketchParams, dtype=np.float32):
        if pu.d_out != pw.d_out:
            raise ValueError("fusion sketches disagree on d_out")
        self.pu = pu
        self.pw = pw
        self.d_out = pu.d_out
        self.mu = sketch_matrix(pu, dtype)
        self.mw = sketch_matrix(pw, dtype)
        self._cache = None

    def forward(self, a, b, training=True):
        fa = np.fft.rfft(_project(a, self.mu), axis=1)
        fb = np.fft.rfft(_project(b, self.mw), axis=1)
        out = np.fft.irfft(fa * fb, n=self.d_out, axis=1)
        self._cache = (fa, fb) if training else None
        return out.astype(a.dtype, copy=False)

    def backward(self, grad):
        if self._cache is None:
            raise RuntimeError("backward without a training-mode forward")
        fa, fb = self._cache
        gf = np.fft.rfft(grad, axis=1)
        dsa = np.fft.irfft(gf * np.conj(fb), n=self.d_out, axis=1).astype(grad.dtype, copy=False)
        dsb = np.fft.irfft(gf * np.conj(fa), n=self.d_out, axis=1).astype(grad.dtype, copy=False)
        da = _project(dsa, self.mu.T)
        db = _project(dsb, self.mw.T)
        return da, db


class ConcatFusion:
    """Channel concatenation baseline: (B, C, F) x 2 -> (B, 2C, F)."""

    def __init__(self):
        self._split = None

    def forward(self, a, b, training=True):
        self._split = a.shape[1]
        return np.concatenate([a, b], axis=1)

    def backward(self, grad):
        return grad[:, : self._split], grad[:, self._split :]


class TcnModel:
    """The full separator. See the module docstring for the wiring."""

    def __init__(self, channels=257, dilations=(1, 2, 4, 8), taps=3,
                 fusion="cbp", input_mode="both", d_out=None, seed=0,
                 dtype=np.float32, bn_eps=1e-5, bn_momentum=0.1):
        if fusion not in FUSION_MODES:
            raise ValueError(f"fusion must be one of {FUSION_MODES}, got {fusion!r}")
        if input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be one of {INPUT_MODES}, got {input_mode!r}")
        self.channels = int(channels)
        self.dilations = tuple(int(d) for d in dilations)
        self.taps = int(taps)
        self.fusion_mode = fusion
        self.input_mode = input_mode
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        self.bn_eps = float(bn_eps)
        self.bn_momentum = float(bn_momentum)

        rng = np.random.default_rng(seed)
        mk = lambda dil, relu=True: ConvBlock(
            channels, dil, rng, self.dtype, relu, taps, bn_eps, bn_momentum
        )
        # branches first, in a fixed order, so their weights are identical
        # across fusion/input modes at the same seed
        self.branch0 = [mk(d) for d in self.dilations]
        self.branch1 = [mk(d) for d in self.dilations]

        if input_mode == "both" and fusion == "cbp":
            self.d_out = int(d_out) if d_out else channels
            pu = make_sketch_params(channels, self.d_out, rng)
            pw = make_sketch_params(channels, self.d_out, rng)
            self.fusion = CbpFusion(pu, pw, self.dtype)
            head_in = self.d_out
        elif input_mode == "both":
            self.d_out = 2 * channels
            self.fusion = ConcatFusion()
            head_in = 2 * channels
        else:
            self.d_out = channels
            self.fusion = None
            head_in = channels

        self.head_conv_in = Conv1d(head_in, channels, 1, 1, rng, self.dtype)
        self.head_act = ReLU()
        self.head_block = mk(1, relu=False)
        self.head_conv_out = Conv1d(channels, channels, 1, 1, rng, self.dtype)

    # ---- forward / backward -------------------------------------------------

    def _check_input(self, x, name):
        if x.ndim != 3 or x.shape[1] != self.channels:
            raise ValueError(
                f"{name} must be (batch, {self.channels}, frames), got {x.shape}"
            )
        if x.dtype != self.dtype:
            raise ValueError(f"{name} dtype {x.dtype} != model dtype {self.dtype}")

    def forward(self, b0, b1, training=True):
        """Estimate the clean magnitude map from the two beamformed maps.

        b0/b1: (batch, channels, frames). Unused inputs in single-branch
        modes may be None.
        """
        if self.input_mode in ("both", "b0_only"):
            self._check_input(b0, "b0")
        if self.input_mode in ("both", "b1_only"):
            self._check_input(b1, "b1")

        if self.input_mode == "both":
            a = b0
            for blk in self.branch0:
                a = blk.forward(a, training)
            b = b1
            for blk in self.branch1:
                b = blk.forward(b, training)
            fused = self.fusion.forward(a, b, training)
        elif self.input_mode == "b0_only":
            fused = b0
            for blk in self.branch0:
                fused = blk.forward(fused, training)
        else:
            fused = b1
            for blk in self.branch1:
                fused = blk.forward(fused, training)

        h = self.head_conv_in.forward(fused, training)
        h = self.head_act.forward(h, training)
        h = self.head_block.forward(h, training)
        return self.head_conv_out.forward(h, training)

    def backward(self, grad):
        """Backprop through the whole model; returns (grad_b0, grad_b1)."""
        g = self.head_conv_out.backward(grad)
        g = self.head_block.backward(g)
        g = self.head_act.backward(g)
        g = self.head_conv_in.backward(g)

        if self.input_mode == "both":
            ga, gb = self.fusion.backward(g)
            for blk in reversed(self.branch0):
                ga = blk.backward(ga)
            for blk in reversed(self.branch1):
                gb = blk.backward(gb)
            return ga, gb
        if self.input_mode == "b0_only":
            for blk in reversed(self.branch0):
                g = blk.backward(g)
            return g, None
        for blk in reversed(self.branch1):
            g = blk.backward(g)
        return None, g

    # ---- parameter traversal ------------------------------------------------

    def named_layers(self):
        out = []
        for i, blk in enumerate(self.branch0):
            out += blk.named_layers(f"branch0.block{i}")
        for i, blk in enumerate(self.branch1):
            out += blk.named_layers(f"branch1.block{i}")
        out.append(("head.conv_in", self.head_conv_in))
        out += self.head_block.named_layers("head.block")
        out.append(("head.conv_out", self.head_conv_out))
        return out

    def parameters(self):
        """Ordered (qualified_name, layer, attribute) triples of trainables."""
        out = []
        for lname, layer in self.named_layers():
            for p in layer.param_names:
                out.append((f"{lname}.{p}", layer, p))
        return out

    def state_tensors(self):
        """Trainables plus batch-norm running statistics, in a fixed order."""
        out = []
        for lname, layer in self.named_layers():
            for p in layer.param_names + layer.state_names:
                out.append((f"{lname}.{p}", layer, p))
        return out

    def snapshot(self):
        return {name: getattr(layer, attr).copy() for name, layer, attr in self.state_tensors()}

    def restore(self, snap):
        for name, layer, attr in self.state_tensors():
            setattr(layer, attr, snap[name].copy())

    # ---- receptive field ----------------------------------------------------

    def receptive_radius(self) -> int:
        """Frames each side of an output frame that can influence it,
        accumulated over every conv on the deepest input-to-output path."""
        per_conv = []
        if self.input_mode != "b1_only":
            per_conv += [blk.dilation for blk in self.branch0 for _ in range(2)]
        else:
            per_conv += [blk.dilation for blk in self.branch1 for _ in range(2)]
        per_conv += [self.head_block.dilation] * 2
        half = (self.taps - 1) // 2
        return sum(half * d for d in per_conv)
