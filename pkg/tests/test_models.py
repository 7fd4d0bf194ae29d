"""Reference models and the external prediction clients."""

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from truthlens import (
    HttpModel,
    LinearModelSpec,
    MlpModelSpec,
    ModelError,
    SubprocessModel,
    ValidationError,
    linear_predict,
    load_model_spec,
    mlp_predict,
)
from truthlens.models import model_spec_from_dict


class TestLinearModel:
    def test_pixel_example_values(self):
        spec = LinearModelSpec(np.array([0.2, 0.05, -0.35]), 0.0, "sigmoid")
        assert linear_predict(spec, [0.8, 0.6, 0.9]) == pytest.approx(0.469, abs=1e-3)
        assert linear_predict(spec, [1.0, 0.8, 1.0]) == pytest.approx(0.472, abs=1e-3)

    def test_zero_model_is_half_everywhere(self):
        spec = LinearModelSpec(np.zeros(4), 0.0, "sigmoid")
        rng = np.random.Generator(np.random.PCG64(1))
        for _ in range(5):
            assert linear_predict(spec, rng.normal(size=4)) == 0.5

    def test_identity_link(self):
        spec = LinearModelSpec(np.array([2.0, -1.0]), 0.5)
        assert linear_predict(spec, [3.0, 1.0]) == pytest.approx(5.5)

    def test_sigmoid_is_stable_at_extremes(self):
        spec = LinearModelSpec(np.array([1.0]), 0.0, "sigmoid")
        assert linear_predict(spec, [1e6]) == 1.0
        assert linear_predict(spec, [-1e6]) == 0.0

    def test_monotone_with_weight_sign(self):
        spec = LinearModelSpec(np.array([0.7, -0.3]), 0.1, "sigmoid")
        base = linear_predict(spec, [1.0, 1.0])
        assert linear_predict(spec, [1.5, 1.0]) > base
        assert linear_predict(spec, [1.0, 1.5]) < base

    def test_length_mismatch(self):
        spec = LinearModelSpec(np.array([1.0, 2.0]))
        with pytest.raises(ValidationError, match="length mismatch"):
            spec.predict_batch([[1.0]])

    def test_batching_invariance_is_bitwise(self):
        rng = np.random.Generator(np.random.PCG64(2))
        spec = LinearModelSpec(rng.normal(size=20), 0.2, "sigmoid")
        rows = rng.normal(size=(50, 20))
        batched = spec.predict_batch(list(rows))
        single = [spec.predict_one(r) for r in rows]
        assert list(batched) == single


class TestMlpModel:
    def test_degenerate_mlp_reproduces_linear(self):
        # relu(wx) - relu(-wx) = wx exactly
        w = np.array([0.3, -0.8, 0.5])
        linear = LinearModelSpec(w, bias=0.25)
        mlp = MlpModelSpec(
            layers=(
                (np.vstack([w, -w]), np.zeros(2)),
                (np.array([[1.0, -1.0]]), np.array([0.25])),
            ),
            activation="relu",
            link="identity",
        )
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(20):
            x = rng.normal(size=3)
            assert mlp_predict(mlp, x) == pytest.approx(linear_predict(linear, x), abs=1e-12)

    def test_forward_pass_matches_independent_oracle(self):
        rng = np.random.Generator(np.random.PCG64(4))
        w1, b1 = rng.normal(size=(5, 3)), rng.normal(size=5)
        w2, b2 = rng.normal(size=(1, 5)), rng.normal(size=1)
        mlp = MlpModelSpec(layers=((w1, b1), (w2, b2)), activation="tanh", link="sigmoid")
        for _ in range(10):
            x = rng.normal(size=3)
            h = np.tanh(w1 @ x + b1)
            t = float((w2 @ h + b2)[0])
            want = 1.0 / (1.0 + np.exp(-t))
            assert mlp_predict(mlp, x) == pytest.approx(want, abs=1e-12)

    def test_zero_final_layer_is_constant(self):
        rng = np.random.Generator(np.random.PCG64(5))
        w1, b1 = rng.normal(size=(4, 2)), rng.normal(size=4)
        mlp = MlpModelSpec(
            layers=((w1, b1), (np.zeros((1, 4)), np.array([0.3]))),
            activation="tanh", link="sigmoid",
        )
        want = 1.0 / (1.0 + np.exp(-0.3))
        for _ in range(5):
            assert mlp_predict(mlp, rng.normal(size=2)) == pytest.approx(want)

    def test_shape_chain_checked(self):
        with pytest.raises(ValidationError, match="expects"):
            MlpModelSpec(
                layers=((np.zeros((3, 2)), np.zeros(3)), (np.zeros((1, 5)), np.zeros(1)))
            )
        with pytest.raises(ValidationError, match="single output"):
            MlpModelSpec(layers=((np.zeros((2, 2)), np.zeros(2)),))

    def test_batching_invariance_is_bitwise(self):
        rng = np.random.Generator(np.random.PCG64(6))
        mlp = MlpModelSpec(
            layers=((rng.normal(size=(8, 4)), rng.normal(size=8)),
                    (rng.normal(size=(1, 8)), rng.normal(size=1))),
        )
        rows = rng.normal(size=(30, 4))
        assert list(mlp.predict_batch(list(rows))) == [mlp.predict_one(r) for r in rows]


class TestSpecLoading:
    def test_linear_round_trip(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps(
            {"type": "linear", "weights": [0.2, 0.05, -0.35], "bias": 0, "link": "sigmoid"}
        ))
        model = load_model_spec(str(path))
        assert isinstance(model, LinearModelSpec)
        assert linear_predict(model, [0.8, 0.6, 0.9]) == pytest.approx(0.469, abs=1e-3)

    def test_mlp_round_trip(self, tmp_path):
        d = {
            "type": "mlp",
            "layers": [
                {"weights": [[1.0, 0.5], [0.25, -1.0]], "bias": [0.0, 0.1]},
                {"weights": [[0.3, -0.2]], "bias": [0.05]},
            ],
            "activation": "tanh",
            "link": "sigmoid",
        }
        path = tmp_path / "mlp.json"
        path.write_text(json.dumps(d))
        model = load_model_spec(str(path))
        assert isinstance(model, MlpModelSpec)
        model.predict_batch([[0.5, -0.5]])

    def test_unknown_type_rejected(self):
        with pytest.raises(ValidationError, match="unknown model type"):
            model_spec_from_dict({"type": "forest"})

    def test_missing_fields_rejected(self):
        with pytest.raises(ValidationError, match="malformed model spec"):
            model_spec_from_dict({"type": "linear"})


ECHO_SERVER = (
    "import sys, json\n"
    "for line in sys.stdin:\n"
    "    req = json.loads(line)\n"
    "    print(json.dumps({'predictions': [row[0] for row in req['instances']]}), flush=True)\n"
)


class TestSubprocessModel:
    def test_echo_model_returns_first_coordinate(self):
        with SubprocessModel([sys.executable, "-c", ECHO_SERVER]) as model:
            preds = model.predict_batch([[1.5, 2.0], [3.25, 4.0], [-0.5, 9.9]])
            assert list(preds) == [1.5, 3.25, -0.5]
            # session stays alive across requests
            assert list(model.predict_batch([[7.0, 0.0]])) == [7.0]

    def test_wrong_count_is_typed(self):
        bad = (
            "import sys, json\n"
            "for line in sys.stdin:\n"
            "    print(json.dumps({'predictions': [1.0]}), flush=True)\n"
        )
        with SubprocessModel([sys.executable, "-c", bad]) as model:
            with pytest.raises(ModelError, match="count mismatch"):
                model.predict_batch([[1.0], [2.0]])

    def test_error_object_is_surfaced(self):
        bad = (
            "import sys, json\n"
            "for line in sys.stdin:\n"
            "    print(json.dumps({'error': 'cannot handle'}), flush=True)\n"
        )
        with SubprocessModel([sys.executable, "-c", bad]) as model:
            with pytest.raises(ModelError, match="cannot handle"):
                model.predict_batch([[1.0]])

    def test_dead_process_is_reported(self):
        with SubprocessModel([sys.executable, "-c", "pass"]) as model:
            with pytest.raises(ModelError, match="model process"):
                model.predict_batch([[1.0]])
                model.predict_batch([[1.0]])

    def test_empty_batch_rejected(self):
        with SubprocessModel([sys.executable, "-c", ECHO_SERVER]) as model:
            with pytest.raises(ValidationError, match="empty batch"):
                model.predict_batch([])


class _Handler(BaseHTTPRequestHandler):
    mode = "echo"

    def do_POST(self):
        if self.path != "/predict":
            self.send_error(404)
            return
        n = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(n))
        if self.mode == "echo":
            payload = json.dumps({"predictions": [r[0] for r in body["instances"]]})
            code = 200
        elif self.mode == "short":
            payload = json.dumps({"predictions": [0.0]})
            code = 200
        elif self.mode == "garbage":
            payload = "not json at all"
            code = 200
        else:
            payload = "boom"
            code = 500
        data = payload.encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestHttpModel:
    def test_echo_model(self, http_server):
        _Handler.mode = "echo"
        model = HttpModel(http_server)
        assert list(model.predict_batch([[0.25, 1.0], [4.5, 2.0]])) == [0.25, 4.5]

    def test_count_mismatch(self, http_server):
        _Handler.mode = "short"
        with pytest.raises(ModelError, match="count mismatch"):
            HttpModel(http_server).predict_batch([[1.0], [2.0]])

    def test_malformed_response(self, http_server):
        _Handler.mode = "garbage"
        with pytest.raises(ModelError, match="malformed"):
            HttpModel(http_server).predict_batch([[1.0]])

    def test_http_error_status(self, http_server):
        _Handler.mode = "error"
        with pytest.raises(ModelError, match="status 500"):
            HttpModel(http_server).predict_batch([[1.0]])

    def test_unreachable_endpoint(self):
        model = HttpModel("http://127.0.0.1:9", timeout=0.2)
        with pytest.raises(ModelError, match="request failed"):
            model.predict_batch([[1.0]])

    def test_empty_batch_rejected(self, http_server):
        with pytest.raises(ValidationError, match="empty batch"):
            HttpModel(http_server).predict_batch([])

    def test_parity_with_in_process_linear(self, http_server):
        _Handler.mode = "echo"
        http = HttpModel(http_server)
        local = LinearModelSpec(np.array([1.0, 0.0]))  # also returns column 0
        rng = np.random.Generator(np.random.PCG64(7))
        rows = rng.normal(size=(100, 2))
        diff = np.abs(http.predict_batch(list(rows)) - local.predict_batch(list(rows)))
        assert float(diff.max()) <= 1e-9
