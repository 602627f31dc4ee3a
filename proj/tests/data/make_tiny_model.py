"""Writes tiny_classifier.onnx, a small fixed-weight network with the same
input/output contract as an exported classifier:

    input "input": float32 [1, 224, 224, 3] (NHWC, values in [0, 1])
    output "prob": float32 [1, 1]

Also prints reference probabilities from onnxruntime for the probe inputs
used by the unit tests.
"""
import sys

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper


def build():
    rng = np.random.default_rng(7)
    conv_w = rng.normal(0.0, 0.5, size=(4, 3, 3, 3)).astype(np.float32)
    conv_b = rng.normal(0.0, 0.1, size=(4,)).astype(np.float32)
    fc_w = rng.normal(0.0, 1.0, size=(4, 1)).astype(np.float32)
    fc_b = np.array([-0.2], dtype=np.float32)

    nodes = [
        helper.make_node("Transpose", ["input"], ["nchw"], perm=[0, 3, 1, 2]),
        helper.make_node("Conv", ["nchw", "conv_w", "conv_b"], ["conv"],
                         kernel_shape=[3, 3], strides=[4, 4], pads=[1, 1, 1, 1]),
        helper.make_node("Sigmoid", ["conv"], ["gate"]),
        helper.make_node("Mul", ["conv", "gate"], ["swish"]),
        helper.make_node("GlobalAveragePool", ["swish"], ["pooled"]),
        helper.make_node("Flatten", ["pooled"], ["flat"], axis=1),
        helper.make_node("MatMul", ["flat", "fc_w"], ["fc"]),
        helper.make_node("Add", ["fc", "fc_b"], ["logit"]),
        helper.make_node("Sigmoid", ["logit"], ["prob"]),
    ]
    graph = helper.make_graph(
        nodes, "tiny_classifier",
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 224, 224, 3])],
        [helper.make_tensor_value_info("prob", TensorProto.FLOAT, [1, 1])],
        initializer=[numpy_helper.from_array(conv_w, "conv_w"),
                     numpy_helper.from_array(conv_b, "conv_b"),
                     numpy_helper.from_array(fc_w, "fc_w"),
                     numpy_helper.from_array(fc_b, "fc_b")])
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 11)])
    model.ir_version = 6
    onnx.checker.check_model(model)
    return model


def probes():
    ramp = np.zeros((1, 224, 224, 3), dtype=np.float32)
    for y in range(224):
        for x in range(224):
            ramp[0, y, x] = [x / 223.0, y / 223.0, ((x + y) % 256) / 255.0]
    return {
        "zeros": np.zeros((1, 224, 224, 3), dtype=np.float32),
        "ones": np.ones((1, 224, 224, 3), dtype=np.float32),
        "ramp": ramp,
    }


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "tiny_classifier.onnx"
    onnx.save(build(), out)
    try:
        import onnxruntime as ort
    except ImportError:
        sys.exit(0)
    sess = ort.InferenceSession(out, providers=["CPUExecutionProvider"])
    for name, x in probes().items():
        p = sess.run(["prob"], {"input": x})[0][0, 0]
        print(f"{name}: {p:.9f}")
