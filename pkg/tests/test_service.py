"""HTTP service endpoints and CLI delegation to a service."""
import contextlib
import io
import json

import httpx
import pytest
from starlette.testclient import TestClient

from sigma_energy.cli import main
from sigma_energy.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["package"] == "sigma-energy"


def test_cases_listing(client):
    r = client.get("/cases")
    assert r.status_code == 200
    cases = r.json()["cases"]
    assert "identity-ratio" in cases
    assert "degree-table" in cases
    assert len(cases) >= 12


def test_run_energy(client):
    r = client.post("/run", json={
        "command": "energy",
        "overrides": {"map.family": "identity", "map.lam": "1.0"},
    })
    assert r.status_code == 200
    body = r.json()
    assert body["exit_code"] == 0
    assert body["report"]["radius_opt"]["ratio"] == pytest.approx(1.0)


def test_run_critical_with_config_text(client):
    r = client.post("/run", json={
        "command": "critical",
        "config_text": "map.family = henon\nmap.b = 1.0\n",
    })
    assert r.status_code == 200
    body = r.json()
    assert body["report"]["system"] == "area2d"
    assert body["report"]["critical"] is True
    names = [t["name"] for t in body["tables"]]
    assert "residual_norms" in names


def test_run_rejects_unknown_command(client):
    r = client.post("/run", json={"command": "noop"})
    assert r.status_code == 400


def test_run_rejects_bad_config(client):
    r = client.post("/run", json={"command": "energy",
                                  "config_text": "nope = 1\n"})
    assert r.status_code == 400
    assert "nope" in r.json()["detail"]


def test_energy_endpoint(client):
    r = client.post("/energy", json={
        "overrides": {"map.family": "gamma_hopf", "map.gamma": "hopf_minus",
                      "map.k": "2", "kappa": "0.0"},
    })
    assert r.status_code == 200
    rep = r.json()["report"]
    assert rep["e_sigma2"] == pytest.approx(16 * 3.141592653589793 ** 2,
                                            rel=1e-8)
    assert rep["bound_attained"] is True


def test_reproduce_endpoint(client):
    r = client.post("/reproduce/henon-critical")
    assert r.status_code == 200
    body = r.json()
    assert body["report"]["passed"] is True
    assert body["exit_code"] == 0


def test_reproduce_unknown_case_404(client):
    assert client.post("/reproduce/not-a-case").status_code == 404


class _AppTransport(httpx.BaseTransport):
    """Dispatch httpx requests into an ASGI app without a socket."""

    def __init__(self, app):
        self._client = TestClient(app)

    def handle_request(self, request):
        resp = self._client.request(
            request.method, str(request.url),
            content=request.read(),
            headers={k: v for k, v in request.headers.items()
                     if k.lower() not in ("host", "content-length")})
        return httpx.Response(resp.status_code, headers=resp.headers,
                              content=resp.content)


def _run_cli(argv, transport):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv, transport=transport)
    return code, out.getvalue(), err.getvalue()


def test_cli_delegates_to_server():
    transport = _AppTransport(create_app())
    code, out, _ = _run_cli(
        ["critical", "--server", "http://service",
         "--set", "map.family=henon", "--set", "map.b=1.0"], transport)
    assert code == 0
    rep = json.loads(out)
    assert rep["system"] == "area2d"
    assert rep["critical"] is True


def test_cli_server_reproduce_exit_codes():
    transport = _AppTransport(create_app())
    code, out, _ = _run_cli(
        ["reproduce", "identity-ratio", "--server", "http://service"],
        transport)
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_cli_local_and_remote_reports_agree(tmp_path):
    transport = _AppTransport(create_app())
    local_code, local_out, _ = _run_cli(
        ["energy", "--set", "map.family=identity"], None)
    remote_code, remote_out, _ = _run_cli(
        ["energy", "--server", "http://service",
         "--set", "map.family=identity"], transport)
    assert local_code == remote_code == 0
    local, remote = json.loads(local_out), json.loads(remote_out)
    # the config echo differs only in its source label
    lc = local.pop("config").splitlines()[1:]
    rc = remote.pop("config").splitlines()[1:]
    assert lc == rc
    assert local == remote
