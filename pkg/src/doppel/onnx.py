"""Backend-neutral graph IR with ONNX protobuf serialization.

The serializer writes the ModelProto wire format directly (varint +
length-delimited encoding for the small field subset used here), so no
protobuf runtime is required. parse() reads the same subset back and
interpret() evaluates a graph in float32 for verification against the
in-memory float64 networks.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import architectures
from .architectures import DenseNet, DndtNet, DndtSpec, ProxyDescriptor, Regularizer
from .errors import EvaluationError, ExportError, ParseError
from .numcore import Rng

IR_VERSION = 8
OPSET_VERSION = 13
PRODUCER_NAME = "doppel"
PRODUCER_VERSION = "0.1.0"

SUPPORTED_OPS = ("Gemm", "Sigmoid", "Softmax", "Relu", "Mul", "Reshape")

# TensorProto.DataType values
FLOAT32 = 1
INT64 = 7


@dataclass(frozen=True)
class TensorInit:
    name: str
    dims: tuple
    data_type: int
    raw: bytes

    def to_array(self) -> np.ndarray:
        dtype = "<f4" if self.data_type == FLOAT32 else "<i8"
        return np.frombuffer(self.raw, dtype=dtype).reshape(self.dims)


def float_tensor(name: str, values) -> TensorInit:
    arr = np.ascontiguousarray(values, dtype="<f4")
    return TensorInit(name, tuple(arr.shape), FLOAT32, arr.tobytes())


def int64_tensor(name: str, values) -> TensorInit:
    arr = np.ascontiguousarray(values, dtype="<i8")
    return TensorInit(name, tuple(arr.shape), INT64, arr.tobytes())


@dataclass(frozen=True)
class Node:
    op_type: str
    inputs: tuple
    outputs: tuple
    attrs: tuple = ()  # ((name, int-or-float value), ...)
    name: str = ""


@dataclass(frozen=True)
class ValueInfo:
    name: str
    dims: tuple  # ints, or "N" for the symbolic batch dimension


@dataclass(frozen=True)
class OnnxGraph:
    name: str
    nodes: tuple
    initializers: tuple
    inputs: tuple
    outputs: tuple
    ir_version: int = IR_VERSION
    opset_version: int = OPSET_VERSION
    producer_name: str = PRODUCER_NAME

    def validate(self) -> None:
        if len(self.outputs) != 1:
            raise ExportError("graph must have exactly one output")
        known = {v.name for v in self.inputs} | {t.name for t in self.initializers}
        for node in self.nodes:
            if node.op_type not in SUPPORTED_OPS:
                raise ExportError(f"unsupported op {node.op_type!r}")
            for tensor in node.inputs:
                if tensor not in known:
                    raise ExportError(
                        f"node {node.name or node.op_type} reads {tensor!r} before it is produced"
                    )
            known.update(node.outputs)
        if self.outputs[0].name not in known:
            raise ExportError(f"graph output {self.outputs[0].name!r} is never produced")


# ---------------------------------------------------------------------------
# Graph construction


def _dense_graph(net: DenseNet) -> OnnxGraph:
    desc = net.descriptor
    params = net.parameters()
    nodes = []
    inits = []
    n_layers = len(desc.layers)
    head_identity = desc.activation == "identity"
    h = "input"
    for i in range(n_layers):
        inits.append(float_tensor(f"w{i}", params[f"w{i}"]))
        inits.append(float_tensor(f"b{i}", params[f"b{i}"]))
        last = i == n_layers - 1
        z = "output" if (last and head_identity) else f"z{i}"
        nodes.append(Node(
            "Gemm", (h, f"w{i}", f"b{i}"), (z,),
            attrs=(("alpha", 1.0), ("beta", 1.0), ("transA", 0), ("transB", 1)),
            name=f"dense{i}",
        ))
        if not last:
            h = f"h{i}"
            nodes.append(Node("Relu", (z,), (h,), name=f"relu{i}"))
    if not head_identity:
        op = "Softmax" if desc.activation == "softmax" else "Sigmoid"
        attrs = (("axis", -1),) if op == "Softmax" else ()
        nodes.append(Node(op, (f"z{n_layers - 1}",), ("output",), attrs=attrs, name="head"))
    return OnnxGraph(
        name=f"doppel_{desc.name}",
        nodes=tuple(nodes),
        initializers=tuple(inits),
        inputs=(ValueInfo("input", ("N", desc.input_dim)),),
        outputs=(ValueInfo("output", ("N", desc.output_dim)),),
    )


def _dndt_graph(net: DndtNet) -> OnnxGraph:
    desc = net.descriptor
    spec = desc.dndt
    params = net.parameters()
    tau = spec.temperature
    nodes = []
    inits = []
    bin_names = []
    bin_sizes = []
    for i in range(spec.n_features):
        beta = params[f"cuts{i}"]
        c = beta.shape[0]
        W = np.zeros((c + 1, spec.n_features))
        W[:, i] = np.arange(1, c + 2) / tau
        b = np.concatenate([[0.0], -np.cumsum(beta)]) / tau
        inits.append(float_tensor(f"f{i}_w", W))
        inits.append(float_tensor(f"f{i}_b", b))
        nodes.append(Node(
            "Gemm", ("input", f"f{i}_w", f"f{i}_b"), (f"f{i}_z",),
            attrs=(("alpha", 1.0), ("beta", 1.0), ("transA", 0), ("transB", 1)),
            name=f"bin{i}",
        ))
        nodes.append(Node("Softmax", (f"f{i}_z",), (f"f{i}_bins",),
                          attrs=(("axis", -1),), name=f"bin{i}_soft"))
        bin_names.append(f"f{i}_bins")
        bin_sizes.append(c + 1)

    # Row-wise outer products: lift both operands to rank 3, multiply with
    # broadcasting, then flatten back to [N, acc*bins].
    acc = bin_names[0]
    acc_size = bin_sizes[0]
    for i in range(1, spec.n_features):
        inits.append(int64_tensor(f"j{i}_lshape", [0, acc_size, 1]))
        inits.append(int64_tensor(f"j{i}_rshape", [0, 1, bin_sizes[i]]))
        inits.append(int64_tensor(f"j{i}_oshape", [0, acc_size * bin_sizes[i]]))
        nodes.append(Node("Reshape", (acc, f"j{i}_lshape"), (f"j{i}_l",), name=f"join{i}_l"))
        nodes.append(Node("Reshape", (bin_names[i], f"j{i}_rshape"), (f"j{i}_r",), name=f"join{i}_r"))
        nodes.append(Node("Mul", (f"j{i}_l", f"j{i}_r"), (f"j{i}_p",), name=f"join{i}"))
        acc_size *= bin_sizes[i]
        nodes.append(Node("Reshape", (f"j{i}_p", f"j{i}_oshape"), (f"leaf{i}",), name=f"join{i}_flat"))
        acc = f"leaf{i}"

    inits.append(float_tensor("leaf_w", params["leaf_weights"].T))
    nodes.append(Node(
        "Gemm", (acc, "leaf_w"), ("scores",),
        attrs=(("alpha", 1.0), ("beta", 1.0), ("transA", 0), ("transB", 1)),
        name="leaf_mix",
    ))
    nodes.append(Node("Softmax", ("scores",), ("output",), attrs=(("axis", -1),), name="head"))
    return OnnxGraph(
        name=f"doppel_{desc.name}",
        nodes=tuple(nodes),
        initializers=tuple(inits),
        inputs=(ValueInfo("input", ("N", spec.n_features)),),
        outputs=(ValueInfo("output", ("N", spec.n_classes)),),
    )


def build_graph(net) -> OnnxGraph:
    """Lower a trained network to the graph IR (weights become float32)."""
    if isinstance(net, DndtNet):
        graph = _dndt_graph(net)
    elif isinstance(net, DenseNet):
        graph = _dense_graph(net)
    else:
        raise ExportError(f"cannot export network of type {type(net).__name__}")
    graph.validate()
    return graph


# ---------------------------------------------------------------------------
# Protobuf wire encoding

_WIRE_VARINT = 0
_WIRE_FIXED64 = 1
_WIRE_LEN = 2
_WIRE_FIXED32 = 5


def _varint(value: int) -> bytes:
    if value < 0:
        value &= (1 << 64) - 1  # two's-complement for negative int64
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _tag(field_number: int, wire_type: int) -> bytes:
    return _varint((field_number << 3) | wire_type)


def _f_varint(field_number: int, value: int) -> bytes:
    return _tag(field_number, _WIRE_VARINT) + _varint(value)


def _f_bytes(field_number: int, payload: bytes) -> bytes:
    return _tag(field_number, _WIRE_LEN) + _varint(len(payload)) + payload


def _f_string(field_number: int, text: str) -> bytes:
    return _f_bytes(field_number, text.encode("utf-8"))


def _f_float32(field_number: int, value: float) -> bytes:
    return _tag(field_number, _WIRE_FIXED32) + struct.pack("<f", value)


def _attribute(name: str, value) -> bytes:
    # AttributeProto: name=1, f=2, i=3, type=20 (FLOAT=1, INT=2)
    out = _f_string(1, name)
    if isinstance(value, float):
        out += _f_float32(2, value) + _f_varint(20, 1)
    else:
        out += _f_varint(3, int(value)) + _f_varint(20, 2)
    return out


def _node_proto(node: Node) -> bytes:
    out = b""
    for name in node.inputs:
        out += _f_string(1, name)
    for name in node.outputs:
        out += _f_string(2, name)
    if node.name:
        out += _f_string(3, node.name)
    out += _f_string(4, node.op_type)
    for attr_name, attr_value in node.attrs:
        out += _f_bytes(5, _attribute(attr_name, attr_value))
    return out


def _tensor_proto(t: TensorInit) -> bytes:
    # TensorProto: dims=1 (packed), data_type=2, name=8, raw_data=9
    packed_dims = b"".join(_varint(d) for d in t.dims)
    out = _f_bytes(1, packed_dims) if t.dims else b""
    out += _f_varint(2, t.data_type)
    out += _f_string(8, t.name)
    out += _f_bytes(9, t.raw)
    return out


def _value_info_proto(v: ValueInfo) -> bytes:
    dims = b""
    for d in v.dims:
        if isinstance(d, str):
            dims += _f_bytes(1, _f_string(2, d))  # Dimension.dim_param
        else:
            dims += _f_bytes(1, _f_varint(1, int(d)))  # Dimension.dim_value
    shape = dims
    tensor_type = _f_varint(1, FLOAT32) + _f_bytes(2, shape)
    type_proto = _f_bytes(1, tensor_type)
    return _f_string(1, v.name) + _f_bytes(2, type_proto)


def serialize(graph: OnnxGraph) -> bytes:
    """Encode the graph as ONNX ModelProto bytes."""
    graph.validate()
    g = b""
    for node in graph.nodes:
        g += _f_bytes(1, _node_proto(node))
    g += _f_string(2, graph.name)
    for t in graph.initializers:
        g += _f_bytes(5, _tensor_proto(t))
    for v in graph.inputs:
        g += _f_bytes(11, _value_info_proto(v))
    for v in graph.outputs:
        g += _f_bytes(12, _value_info_proto(v))

    opset = _f_string(1, "") + _f_varint(2, graph.opset_version)
    model = _f_varint(1, graph.ir_version)
    model += _f_string(2, graph.producer_name)
    model += _f_string(3, PRODUCER_VERSION)
    model += _f_bytes(7, g)
    model += _f_bytes(8, opset)
    return model


# ---------------------------------------------------------------------------
# Protobuf wire decoding


class _Reader:
    def __init__(self, data: bytes, base: int = 0):
        self.data = data
        self.pos = 0
        self.base = base  # offset of this buffer within the outermost message

    def at_end(self) -> bool:
        return self.pos >= len(self.data)

    def _fail(self, message: str):
        raise ParseError(f"{message} at byte {self.base + self.pos}", offset=self.base + self.pos)

    def varint(self) -> int:
        result = 0
        shift = 0
        while True:
            if self.pos >= len(self.data):
                self._fail("truncated varint")
            byte = self.data[self.pos]
            self.pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7
            if shift > 63:
                self._fail("varint overflows 64 bits")

    def signed_varint(self) -> int:
        value = self.varint()
        return value - (1 << 64) if value >= (1 << 63) else value

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            self._fail(f"truncated field (need {n} bytes)")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def field(self):
        """Read one (field_number, wire_type, value) triple."""
        key = self.varint()
        field_number, wire = key >> 3, key & 0x07
        if wire == _WIRE_VARINT:
            return field_number, wire, self.varint()
        if wire == _WIRE_FIXED64:
            return field_number, wire, self.take(8)
        if wire == _WIRE_LEN:
            length = self.varint()
            start = self.base + self.pos
            return field_number, wire, (self.take(length), start)
        if wire == _WIRE_FIXED32:
            return field_number, wire, self.take(4)
        self._fail(f"unknown wire type {wire}")


def _sub(value) -> _Reader:
    payload, start = value
    return _Reader(payload, base=start)


def _parse_attribute(reader: _Reader):
    name = ""
    f_val = None
    i_val = None
    kind = None
    while not reader.at_end():
        num, wire, value = reader.field()
        if num == 1 and wire == _WIRE_LEN:
            name = value[0].decode("utf-8")
        elif num == 2 and wire == _WIRE_FIXED32:
            f_val = struct.unpack("<f", value)[0]
        elif num == 3 and wire == _WIRE_VARINT:
            i_val = value - (1 << 64) if value >= (1 << 63) else value
        elif num == 20 and wire == _WIRE_VARINT:
            kind = value
        # unknown fields skipped: field() already consumed the payload
    if kind == 1:
        return name, float(f_val if f_val is not None else 0.0)
    return name, int(i_val if i_val is not None else 0)


def _parse_node(reader: _Reader) -> Node:
    inputs, outputs, attrs = [], [], []
    op_type = ""
    name = ""
    while not reader.at_end():
        num, wire, value = reader.field()
        if num == 1 and wire == _WIRE_LEN:
            inputs.append(value[0].decode("utf-8"))
        elif num == 2 and wire == _WIRE_LEN:
            outputs.append(value[0].decode("utf-8"))
        elif num == 3 and wire == _WIRE_LEN:
            name = value[0].decode("utf-8")
        elif num == 4 and wire == _WIRE_LEN:
            op_type = value[0].decode("utf-8")
        elif num == 5 and wire == _WIRE_LEN:
            attrs.append(_parse_attribute(_sub(value)))
    return Node(op_type, tuple(inputs), tuple(outputs), tuple(attrs), name)


def _parse_tensor(reader: _Reader) -> TensorInit:
    dims = []
    data_type = FLOAT32
    name = ""
    raw = b""
    while not reader.at_end():
        num, wire, value = reader.field()
        if num == 1 and wire == _WIRE_LEN:  # packed dims
            sub = _sub(value)
            while not sub.at_end():
                dims.append(sub.varint())
        elif num == 1 and wire == _WIRE_VARINT:  # unpacked dims
            dims.append(value)
        elif num == 2 and wire == _WIRE_VARINT:
            data_type = value
        elif num == 8 and wire == _WIRE_LEN:
            name = value[0].decode("utf-8")
        elif num == 9 and wire == _WIRE_LEN:
            raw = value[0]
    return TensorInit(name, tuple(dims), data_type, raw)


def _parse_value_info(reader: _Reader) -> ValueInfo:
    name = ""
    dims = []
    while not reader.at_end():
        num, wire, value = reader.field()
        if num == 1 and wire == _WIRE_LEN:
            name = value[0].decode("utf-8")
        elif num == 2 and wire == _WIRE_LEN:
            type_reader = _sub(value)
            while not type_reader.at_end():
                t_num, t_wire, t_value = type_reader.field()
                if t_num == 1 and t_wire == _WIRE_LEN:  # tensor_type
                    tensor_reader = _sub(t_value)
                    while not tensor_reader.at_end():
                        s_num, s_wire, s_value = tensor_reader.field()
                        if s_num == 2 and s_wire == _WIRE_LEN:  # shape
                            shape_reader = _sub(s_value)
                            while not shape_reader.at_end():
                                d_num, d_wire, d_value = shape_reader.field()
                                if d_num == 1 and d_wire == _WIRE_LEN:
                                    dim_reader = _sub(d_value)
                                    while not dim_reader.at_end():
                                        dd_num, dd_wire, dd_value = dim_reader.field()
                                        if dd_num == 1 and dd_wire == _WIRE_VARINT:
                                            dims.append(int(dd_value))
                                        elif dd_num == 2 and dd_wire == _WIRE_LEN:
                                            dims.append(dd_value[0].decode("utf-8"))
    return ValueInfo(name, tuple(dims))


def parse(data: bytes) -> OnnxGraph:
    """Decode ModelProto bytes produced by serialize (unknown fields skipped)."""
    reader = _Reader(bytes(data))
    ir_version = IR_VERSION
    producer = ""
    opset_version = OPSET_VERSION
    graph_value = None
    while not reader.at_end():
        num, wire, value = reader.field()
        if num == 1 and wire == _WIRE_VARINT:
            ir_version = value
        elif num == 2 and wire == _WIRE_LEN:
            producer = value[0].decode("utf-8")
        elif num == 7 and wire == _WIRE_LEN:
            graph_value = value
        elif num == 8 and wire == _WIRE_LEN:
            opset_reader = _sub(value)
            while not opset_reader.at_end():
                o_num, o_wire, o_value = opset_reader.field()
                if o_num == 2 and o_wire == _WIRE_VARINT:
                    opset_version = o_value
    if graph_value is None:
        raise ParseError("ModelProto has no graph field", offset=len(data))

    nodes, inits, inputs, outputs = [], [], [], []
    name = ""
    g = _sub(graph_value)
    while not g.at_end():
        num, wire, value = g.field()
        if num == 1 and wire == _WIRE_LEN:
            nodes.append(_parse_node(_sub(value)))
        elif num == 2 and wire == _WIRE_LEN:
            name = value[0].decode("utf-8")
        elif num == 5 and wire == _WIRE_LEN:
            inits.append(_parse_tensor(_sub(value)))
        elif num == 11 and wire == _WIRE_LEN:
            inputs.append(_parse_value_info(_sub(value)))
        elif num == 12 and wire == _WIRE_LEN:
            outputs.append(_parse_value_info(_sub(value)))
    graph = OnnxGraph(
        name=name,
        nodes=tuple(nodes),
        initializers=tuple(inits),
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        ir_version=ir_version,
        opset_version=opset_version,
        producer_name=producer,
    )
    graph.validate()
    return graph


# ---------------------------------------------------------------------------
# Reference interpreter (float32 arithmetic)


def _gemm(node: Node, a: np.ndarray, b: np.ndarray, c: np.ndarray | None) -> np.ndarray:
    attrs = dict(node.attrs)
    if attrs.get("transA", 0):
        a = a.T
    if attrs.get("transB", 0):
        b = b.T
    if a.shape[-1] != b.shape[0]:
        raise EvaluationError(
            f"node {node.name or 'Gemm'}: inner dims {a.shape} x {b.shape} do not match"
        )
    out = np.float32(attrs.get("alpha", 1.0)) * (a @ b)
    if c is not None:
        out = out + np.float32(attrs.get("beta", 1.0)) * c
    return out.astype(np.float32)


def _reshape(node: Node, data: np.ndarray, shape: np.ndarray) -> np.ndarray:
    target = []
    for i, d in enumerate(shape.tolist()):
        if d == 0:
            if i >= data.ndim:
                raise EvaluationError(f"node {node.name}: cannot copy dim {i}")
            target.append(data.shape[i])
        else:
            target.append(int(d))
    try:
        return data.reshape(target)
    except ValueError as exc:
        raise EvaluationError(f"node {node.name}: {exc}") from exc


def interpret(graph: OnnxGraph, x) -> np.ndarray:
    """Evaluate the graph on x (rows = batch) using float32 arithmetic."""
    graph.validate()
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 2:
        raise EvaluationError("input must be 2-D [batch x features]")
    expected = graph.inputs[0].dims
    if len(expected) == 2 and not isinstance(expected[1], str) and x.shape[1] != expected[1]:
        raise EvaluationError(
            f"input has {x.shape[1]} features, graph expects {expected[1]}"
        )
    env: dict[str, np.ndarray] = {graph.inputs[0].name: x}
    for t in graph.initializers:
        env[t.name] = t.to_array()
    for node in graph.nodes:
        ins = [env[name] for name in node.inputs]
        if node.op_type == "Gemm":
            out = _gemm(node, ins[0], ins[1], ins[2] if len(ins) > 2 else None)
        elif node.op_type == "Relu":
            out = np.maximum(ins[0], np.float32(0.0))
        elif node.op_type == "Sigmoid":
            out = (1.0 / (1.0 + np.exp(-ins[0].astype(np.float32)))).astype(np.float32)
        elif node.op_type == "Softmax":
            axis = dict(node.attrs).get("axis", -1)
            z = ins[0] - ins[0].max(axis=axis, keepdims=True)
            e = np.exp(z.astype(np.float32))
            out = (e / e.sum(axis=axis, keepdims=True)).astype(np.float32)
        elif node.op_type == "Mul":
            try:
                out = (ins[0] * ins[1]).astype(np.float32)
            except ValueError as exc:
                raise EvaluationError(f"node {node.name}: {exc}") from exc
        elif node.op_type == "Reshape":
            out = _reshape(node, ins[0], ins[1])
        else:
            raise EvaluationError(f"unsupported op {node.op_type!r}")
        env[node.outputs[0]] = out
    return env[graph.outputs[0].name]


# ---------------------------------------------------------------------------
# Native JSON model document

FORMAT_VERSION = 1


def _descriptor_to_dict(desc: ProxyDescriptor) -> dict:
    return {
        "name": desc.name,
        "version": desc.version,
        "activation": desc.activation,
        "loss": desc.loss,
        "task": desc.task,
        "strategy": desc.strategy,
        "layers": [list(pair) for pair in desc.layers],
        "regularizer": {
            "kind": desc.regularizer.kind,
            "alpha": desc.regularizer.alpha,
            "rho": desc.regularizer.rho,
        },
        "dndt": None if desc.dndt is None else {
            "n_features": desc.dndt.n_features,
            "n_classes": desc.dndt.n_classes,
            "cut_points_per_feature": desc.dndt.cut_points_per_feature,
            "temperature": desc.dndt.temperature,
        },
        "searchable_params": {k: list(v) for k, v in desc.searchable_params.items()},
    }


def _descriptor_from_dict(doc: dict) -> ProxyDescriptor:
    reg = doc.get("regularizer", {})
    dndt = doc.get("dndt")
    return ProxyDescriptor(
        name=doc["name"],
        version=doc.get("version", "default"),
        activation=doc["activation"],
        loss=doc["loss"],
        task=doc["task"],
        strategy=doc.get("strategy", "approximate"),
        layers=tuple(tuple(pair) for pair in doc.get("layers", [])),
        regularizer=Regularizer(reg.get("kind", "none"), reg.get("alpha", 0.0), reg.get("rho", 0.5)),
        dndt=None if dndt is None else DndtSpec(
            n_features=dndt["n_features"],
            n_classes=dndt["n_classes"],
            cut_points_per_feature=dndt["cut_points_per_feature"],
            temperature=dndt["temperature"],
        ),
        searchable_params={k: tuple(v) for k, v in doc.get("searchable_params", {}).items()},
    )


def to_native_doc(net, metadata: dict | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "descriptor": _descriptor_to_dict(net.descriptor),
        "weights": {name: arr.tolist() for name, arr in net.parameters().items()},
        "metadata": dict(metadata or {}),
    }


def save_native(path: str, net, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_native_doc(net, metadata), fh, indent=1)


def load_native(path: str):
    """Rebuild (network, metadata) from a native JSON document."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {doc.get('format_version')!r}")
    desc = _descriptor_from_dict(doc["descriptor"])
    net = architectures.instantiate(desc, Rng(0))
    params = net.parameters()
    weights = doc.get("weights", {})
    if set(weights) != set(params):
        raise ParseError(
            f"weight names {sorted(weights)} do not match descriptor parameters {sorted(params)}"
        )
    for name, value in weights.items():
        arr = np.asarray(value, dtype=np.float64)
        if arr.shape != params[name].shape:
            raise ParseError(
                f"weight {name!r} has shape {arr.shape}, descriptor expects {params[name].shape}"
            )
        params[name][...] = arr
    return net, doc.get("metadata", {})
