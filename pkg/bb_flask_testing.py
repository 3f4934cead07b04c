"""Tests for the JSON API"""

import pytest

from bb_codes import get_code
from bb_flask import MAX_SIM_SHOTS, app
from bb_noise import syndrome_of_errors


@pytest.fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as test_client:
        yield test_client


def defects_of(qubits):
    return [int(index) for index in syndrome_of_errors(get_code('gross'), qubits).defects()]


def test_codes(client):
    response = client.get('/codes')
    assert response.status_code == 200
    codes = {summary['name']: summary for summary in response.get_json()}
    assert codes['gross']['k'] == 12
    assert codes['bb72']['n'] == 72


def test_predict_single_error(client):
    response = client.post('/predict', json={'defects': defects_of([30])})
    body = response.get_json()
    assert response.status_code == 200
    assert body['defect_count'] == 3
    assert body['mod_w_class'] == 0
    assert body['predict_converge'] is True
    assert body['features']['max_component'] == 3


def test_predict_from_bits(client):
    bits = [0] * 72
    bits[5] = 1
    body = client.post('/predict', json={'bits': bits}).get_json()
    assert body['defect_count'] == 1
    assert body['predict_converge'] is False
    trivial = client.post('/predict', json={'defects': []}).get_json()
    assert trivial['predict_converge'] is True
    assert 'features' not in trivial


def test_decode(client):
    response = client.post('/decode', json={'defects': defects_of([30, 90]), 'p': 0.01})
    body = response.get_json()
    assert response.status_code == 200
    assert body['decoder'] == 'bp_osd'
    assert body['valid'] is True
    assert body['path'] in ('BP_ONLY', 'BP_OSD')
    assert body['defect_count'] == len(defects_of([30, 90]))


@pytest.mark.parametrize('route, payload', [
    ('/predict', {'code': 'no_such_code'}),
    ('/predict', {'defects': [72]}),
    ('/predict', {'bits': [0] * 71}),
    ('/predict', {'basis': 'Y_memory'}),
    ('/decode', {'defects': [0], 'p': 0.7}),
    ('/decode', {'defects': ['a']}),
    ('/simulate', {'shots': 0}),
    ('/simulate', {'shots': MAX_SIM_SHOTS + 1}),
    ('/simulate', {'shots': 5, 'routing': 'random'}),
    ('/simulate', {'shots': 5, 'colour': 'red'}),
])
def test_bad_requests(client, route, payload):
    response = client.post(route, json=payload)
    assert response.status_code == 400
    assert 'error' in response.get_json()


def test_simulate(client):
    payload = {'shots': 5, 'seed': 1, 'regime': 'code_capacity',
               'noise': {'kind': 'code_capacity_iid', 'p': 0.01}, 'bp': {'max_iter': 20}}
    response = client.post('/simulate', json=payload)
    body = response.get_json()
    assert response.status_code == 200
    assert body['shots'] == body['completed'] == 5
    assert body['config']['bp_latency_converge'] == 46.0
    assert client.post('/simulate', json=payload).get_json() == body
