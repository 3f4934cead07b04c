"""Flask server exposing the decoding lab as a JSON API"""

from dataclasses import asdict

from flask import Flask, jsonify, request
from flask_cors import CORS

from bb_bp import BPConfig
from bb_codes import CodeError, get_code, registry
from bb_gf2 import BitVec, DimensionError
from bb_harness import decode_syndrome
from bb_noise import syndrome_for
from bb_pipeline import PipelineConfig, run_sim
from bb_predictor import FeatureError, extract_features, predict_convergence

app = Flask(__name__)  # pylint: disable=invalid-name

# Allow browser clients on any origin to call the API
API_CLIENT = {"origins": "*"}
app.config['CORS_HEADERS'] = 'Content-Type'
cors = CORS(app, resources={r"*": API_CLIENT})  # pylint: disable=invalid-name

# simulations run inside the request, so keep them small
MAX_SIM_SHOTS = 20000


def bad_request(message):
    response = jsonify({'error': message})
    response.status_code = 400
    return response


def syndrome_from_payload(payload):
    """code + (defects | bits) + basis from a request body -> (code, Syndrome)"""
    code = get_code(payload.get('code', 'gross'))
    basis = payload.get('basis', 'Z_memory')
    code.check_matrix(basis)
    if 'bits' in payload:
        return code, syndrome_for(code, [int(bit) for bit in payload['bits']], basis)
    defects = [int(index) for index in payload.get('defects', [])]
    if any(not 0 <= index < code.n_checks for index in defects):
        raise DimensionError(f"defect index outside 0..{code.n_checks - 1}")
    return code, syndrome_for(code, BitVec.from_indices(defects, code.n_checks), basis)


@app.route('/codes', methods=['GET'])
def list_codes():
    """returns the code registry"""
    return jsonify([code.summary() for code in registry()])


@app.route('/predict', methods=['POST'])
def predict():
    """returns defect count, mod-w class and the convergence prediction of a syndrome"""
    payload = request.get_json(silent=True) or {}
    try:
        code, syndrome = syndrome_from_payload(payload)
        result = {
            'code': code.name,
            'w': code.w,
            'defect_count': syndrome.defect_count,
            'mod_w_class': syndrome.mod_w_class,
            'predict_converge': predict_convergence(syndrome),
        }
        if not syndrome.trivial:
            result['features'] = asdict(extract_features(code, syndrome))
    except (CodeError, DimensionError, FeatureError, ValueError, TypeError) as err:
        return bad_request(str(err))
    return jsonify(result)


@app.route('/decode', methods=['POST'])
def decode():
    """returns the DecodeRecord of BP+OSD on a posted syndrome"""
    payload = request.get_json(silent=True) or {}
    try:
        code, syndrome = syndrome_from_payload(payload)
        bp = dict(payload.get('bp') or {})
        bp.setdefault('channel_p', float(payload.get('p', 0.001)))
        record = decode_syndrome(code, syndrome, BPConfig(bp))
    except (CodeError, DimensionError, ValueError, TypeError) as err:
        return bad_request(str(err))
    return jsonify(asdict(record))


@app.route('/simulate', methods=['POST'])
def simulate():
    """returns the SimReport of a pipeline config"""
    payload = dict(request.get_json(silent=True) or {})
    payload.pop('trace', None)
    try:
        shots = int(payload.pop('shots', 1000))
        seed = int(payload.pop('seed', 0))
        if not 1 <= shots <= MAX_SIM_SHOTS:
            return bad_request(f"shots must lie in 1..{MAX_SIM_SHOTS}")
        report = run_sim(PipelineConfig(payload), shots, seed)
    except (CodeError, ValueError, TypeError) as err:
        return bad_request(str(err))
    return jsonify(report.to_dict())


if __name__ == '__main__':
    app.run()
