"""Regenerate the channel files shipped in ``privmac/data``.

Each channel takes two binary inputs and outputs a product state on the
receiver qubit C and the eavesdropper qubit E.  Qubit states are written
with Bloch vectors in the X-Z plane.

``qubit_mac``
    C points at angle (pi/2)(2x + y), so the four input pairs land on four
    well separated directions.  E points along Z when x == y and along X
    otherwise.  Neither input alone is visible to E, but the pair is.
``leaky_mac``
    Same receiver; E sees a weak copy of x along Z and of y along X.
"""

import json
from pathlib import Path

import numpy as np

from privmac.channel import CqMacChannel, channel_to_json
from privmac.qla import DensityMatrix, tensor
from privmac.split import FiniteDist

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
DATA = Path(__file__).resolve().parents[1] / "src" / "privmac" / "data"


def bloch(rx, rz):
    return DensityMatrix(0.5 * (np.eye(2) + rx * PAULI_X + rz * PAULI_Z))


def qubit_mac():
    outputs = {}
    for x in (0, 1):
        for y in (0, 1):
            a = 0.5 * np.pi * (2 * x + y)
            c = bloch(0.9 * np.sin(a), 0.9 * np.cos(a))
            b = 0.5 * np.pi * (x ^ y)
            e = bloch(0.5 * np.sin(b), 0.5 * np.cos(b))
            outputs[(str(x), str(y))] = tensor(c, e)
    return CqMacChannel(("0", "1"), ("0", "1"), 2, 2, outputs)


def leaky_mac():
    base = qubit_mac()
    outputs = {}
    for (x, y), st in base.outputs.items():
        c = DensityMatrix(st.data.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3))
        e = bloch(0.2 * (1 - 2 * int(y)), 0.2 * (1 - 2 * int(x)))
        outputs[(x, y)] = tensor(c, e)
    return CqMacChannel(("0", "1"), ("0", "1"), 2, 2, outputs)


def write(name, ch):
    u = FiniteDist.uniform(ch.x_alphabet)
    doc = channel_to_json(ch, u, FiniteDist.uniform(ch.y_alphabet))
    outputs = doc.pop("outputs")
    for o in outputs:
        # drop float noise such as cos(pi/2) ~ 6e-17
        o["matrix"] = [[[round(v, 14) + 0.0 for v in z] for z in row] for row in o["matrix"]]
    lines = [f' "{k}": {json.dumps(v)},' for k, v in doc.items()]
    rows = [f"  {json.dumps(o)}" for o in outputs]
    text = "{\n" + "\n".join(lines) + '\n "outputs": [\n' + ",\n".join(rows) + "\n ]\n}\n"
    (DATA / f"{name}.json").write_text(text)


if __name__ == "__main__":
    write("qubit_mac", qubit_mac())
    write("leaky_mac", leaky_mac())
