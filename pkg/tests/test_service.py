import concurrent.futures
import json
import os
import threading

import pytest
from fastapi.testclient import TestClient

from moheat.service import LibraryStore, ServiceConfig, TelemetryHub, create_app
from moheat.library import LibraryEntry
from moheat.patterns import Cold


COLD_PATTERN = {"type": "cold", "intensity": 1.0, "duration_ms": 2000, "delay_ms": 0}
SHORT_HOT = {"type": "hot", "intensity": 1.0, "duration_ms": 1000, "delay_ms": 0}


@pytest.fixture
def client(tmp_path):
    config = ServiceConfig(library_dir=tmp_path / "library", seed_demos=False)
    app = create_app(config)
    with TestClient(app) as c:
        yield c


@pytest.fixture
def seeded_client(tmp_path):
    config = ServiceConfig(library_dir=tmp_path / "library", seed_demos=True)
    app = create_app(config)
    with TestClient(app) as c:
        yield c


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


# -- devices -------------------------------------------------------------------


def test_devices_always_include_virtual(client):
    devices = client.get("/devices").json()["devices"]
    assert {"id": "virtual", "kind": "virtual", "available": True} in devices


def test_unavailable_serial_device_flagged(tmp_path):
    config = ServiceConfig(
        library_dir=tmp_path / "lib",
        serial_devices=("/dev/does-not-exist-9981",),
        seed_demos=False,
    )
    with TestClient(create_app(config)) as client:
        devices = client.get("/devices").json()["devices"]
        serial = [d for d in devices if d["kind"] == "serial"]
        assert serial == [
            {"id": "serial:/dev/does-not-exist-9981", "kind": "serial", "available": False}
        ]


# -- pattern CRUD -----------------------------------------------------------------


def test_save_get_round_trip_canonical(client):
    saved = client.put("/patterns/chill", json=COLD_PATTERN)
    assert saved.status_code == 200
    got = client.get("/patterns/chill")
    assert got.status_code == 200
    assert got.content == saved.content
    # Byte-stable across a second save of what we got back.
    again = client.put("/patterns/chill", content=got.content)
    assert again.content == got.content


def test_get_missing_pattern_404(client):
    response = client.get("/patterns/missing")
    assert response.status_code == 404
    assert response.json()["error"] == "not_found"


def test_save_invalid_pattern_names_field(client):
    bad = dict(COLD_PATTERN, intensity=2.0)
    response = client.put("/patterns/bad", json=bad)
    assert response.status_code == 422
    body = response.json()
    assert body["error"] == "validation_error"
    assert body["path"] == "pattern.intensity"


def test_list_patterns_sorted(client):
    client.put("/patterns/zeta", json=COLD_PATTERN)
    client.put("/patterns/alpha", json=COLD_PATTERN)
    names = [p["name"] for p in client.get("/patterns").json()["patterns"]]
    assert names == ["alpha", "zeta"]


def test_delete_pattern(client):
    client.put("/patterns/gone", json=COLD_PATTERN)
    assert client.delete("/patterns/gone").status_code == 200
    assert client.get("/patterns/gone").status_code == 404
    assert client.delete("/patterns/gone").status_code == 404


def test_save_overwrites_last_write_wins(client):
    client.put("/patterns/p", json=COLD_PATTERN)
    hotter = dict(COLD_PATTERN, intensity=0.25)
    client.put("/patterns/p", json=hotter)
    assert json.loads(client.get("/patterns/p").content)["intensity"] == 0.25


def test_seeded_library_lists_three_demos(seeded_client):
    names = [p["name"] for p in seeded_client.get("/patterns").json()["patterns"]]
    assert names == ["alternating-pulse", "approaching-flames", "snowy-mountain-chill"]


def test_demo_patterns_each_simulate(seeded_client):
    for p in seeded_client.get("/patterns").json()["patterns"]:
        pattern = json.loads(seeded_client.get(f"/patterns/{p['name']}").content)
        response = seeded_client.post("/simulate", json={"pattern": pattern})
        assert response.status_code == 200, response.content


# -- crash safety ------------------------------------------------------------------


def test_failed_rename_leaves_old_file_intact(tmp_path, monkeypatch):
    store = LibraryStore(tmp_path)
    entry = LibraryEntry(Cold(1.0, 2000, 0))
    store.save("keep", entry)
    before = store.get("keep")

    real_replace = os.replace

    def exploding_replace(src, dst):
        raise OSError("injected crash at rename boundary")

    monkeypatch.setattr(os, "replace", exploding_replace)
    with pytest.raises(OSError):
        store.save("keep", LibraryEntry(Cold(0.5, 100, 0)))
    monkeypatch.setattr(os, "replace", real_replace)

    assert store.get("keep") == before
    leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]
    assert leftovers == []


# -- simulate ---------------------------------------------------------------------


def test_simulate_hot_final_temp(client):
    response = client.post(
        "/simulate",
        json={"pattern": SHORT_HOT, "params": {"relaxation_per_s": 0.0}},
    )
    assert response.status_code == 200
    body = response.json()
    samples = body["trace"]["samples"]
    assert len(samples) == 101
    assert abs(samples[-1]["temp_c"] - 33.6) < 1e-9
    assert body["trace"]["source"] == "simulation"
    assert body["timeline"]["total_ms"] == 1000


def test_simulate_cold_final_temp(client):
    cold = {"type": "cold", "intensity": 1.0, "duration_ms": 1000, "delay_ms": 0}
    response = client.post(
        "/simulate", json={"pattern": cold, "params": {"relaxation_per_s": 0.0}}
    )
    assert abs(response.json()["trace"]["samples"][-1]["temp_c"] - 32.7) < 1e-9


def test_simulate_zero_duration_rejected(client):
    bad = dict(SHORT_HOT, duration_ms=0)
    response = client.post("/simulate", json={"pattern": bad})
    assert response.status_code == 422
    assert response.json()["path"] == "pattern.duration_ms"


def test_simulate_stateless_byte_identical(client):
    payload = {"pattern": SHORT_HOT, "params": {"dt_ms": 20}}
    first = client.post("/simulate", json=payload)
    second = client.post("/simulate", json=payload)
    assert first.content == second.content


def test_simulate_rejects_unknown_param(client):
    response = client.post(
        "/simulate", json={"pattern": SHORT_HOT, "params": {"viscosity": 3}}
    )
    assert response.status_code == 422
    assert "params.viscosity" == response.json()["path"]


def test_simulate_dt_mismatch_mentions_remedy(client):
    odd = dict(SHORT_HOT, duration_ms=1005)
    response = client.post("/simulate", json={"pattern": odd})
    assert response.status_code == 422
    assert "dt_ms" in response.json()["detail"]


# -- sessions ----------------------------------------------------------------------


def test_create_session_returns_immediately(client):
    client.put("/patterns/chill", json=COLD_PATTERN)
    response = client.post(
        "/sessions", json={"device_id": "virtual", "pattern_name": "chill"}
    )
    assert response.status_code == 201
    record = response.json()
    assert record["state"] in ("delaying", "playing")
    assert record["device_id"] == "virtual"
    stop = client.post(f"/sessions/{record['session_id']}/stop")
    assert stop.json()["state"] == "stopped"


def test_second_session_on_busy_device_conflicts(client):
    first = client.post("/sessions", json={"pattern": COLD_PATTERN}).json()
    response = client.post("/sessions", json={"pattern": COLD_PATTERN})
    assert response.status_code == 409
    assert response.json()["error"] == "conflict"
    client.post(f"/sessions/{first['session_id']}/stop")


def test_create_with_invalid_inline_pattern(client):
    bad = dict(COLD_PATTERN, intensity=9.0)
    response = client.post("/sessions", json={"pattern": bad})
    assert response.status_code == 422
    # No session was allocated.
    assert client.get("/devices").status_code == 200
    ok = client.post("/sessions", json={"pattern": COLD_PATTERN})
    assert ok.status_code == 201
    client.post(f"/sessions/{ok.json()['session_id']}/stop")


def test_unknown_pattern_name_404(client):
    response = client.post("/sessions", json={"pattern_name": "nope"})
    assert response.status_code == 404


def test_unknown_device_404(client):
    response = client.post(
        "/sessions", json={"device_id": "serial:/dev/zzz", "pattern": COLD_PATTERN}
    )
    assert response.status_code == 404


def test_stop_idempotent(client):
    record = client.post("/sessions", json={"pattern": COLD_PATTERN}).json()
    sid = record["session_id"]
    first = client.post(f"/sessions/{sid}/stop").json()
    second = client.post(f"/sessions/{sid}/stop").json()
    assert first["state"] == "stopped"
    assert second["state"] == "stopped"


def test_stop_unknown_session_404(client):
    assert client.post("/sessions/nope/stop").status_code == 404


def test_get_session_snapshot(client):
    record = client.post("/sessions", json={"pattern": COLD_PATTERN}).json()
    sid = record["session_id"]
    snapshot = client.get(f"/sessions/{sid}").json()
    assert snapshot["session_id"] == sid
    assert snapshot["state"] in ("delaying", "playing", "done")
    client.post(f"/sessions/{sid}/stop")


def test_create_storm_exactly_one_active(client):
    payload = {"device_id": "virtual", "pattern": dict(COLD_PATTERN, duration_ms=3000)}

    def create():
        return client.post("/sessions", json=payload)

    with concurrent.futures.ThreadPoolExecutor(max_workers=32) as pool:
        responses = list(pool.map(lambda _: create(), range(100)))

    created = [r for r in responses if r.status_code == 201]
    conflicts = [r for r in responses if r.status_code == 409]
    assert len(created) == 1
    assert len(conflicts) == 99
    sid = created[0].json()["session_id"]
    client.post(f"/sessions/{sid}/stop")


# -- telemetry ---------------------------------------------------------------------


def collect_ws_messages(client, sid):
    messages = []
    with client.websocket_connect(f"/sessions/{sid}/telemetry") as ws:
        while True:
            try:
                messages.append(json.loads(ws.receive_text()))
            except Exception:
                break
            if messages and messages[-1].get("type") == "status":
                break
    return messages


def test_completed_virtual_session_message_count(client):
    record = client.post(
        "/sessions", json={"pattern": dict(SHORT_HOT, duration_ms=1000)}
    ).json()
    sid = record["session_id"]
    messages = collect_ws_messages(client, sid)
    samples = [m for m in messages if m["type"] == "sample"]
    status = [m for m in messages if m["type"] == "status"]
    assert len(samples) == 101  # 1000 ms at dt=10 inclusive of both ends
    assert len(status) == 1
    assert status[0]["state"] == "done"
    assert len(messages) == 102
    assert messages == sorted(messages, key=lambda m: m.get("t_ms", 0))


def test_two_subscribers_identical_sequences(client):
    record = client.post(
        "/sessions", json={"pattern": dict(SHORT_HOT, duration_ms=500)}
    ).json()
    sid = record["session_id"]
    results = {}

    def subscriber(key):
        results[key] = collect_ws_messages(client, sid)

    threads = [threading.Thread(target=subscriber, args=(i,)) for i in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(15)
    assert results[0] == results[1]
    assert results[0][-1]["type"] == "status"


def test_stream_on_stopped_session_single_terminal_message(client):
    record = client.post("/sessions", json={"pattern": COLD_PATTERN}).json()
    sid = record["session_id"]
    client.post(f"/sessions/{sid}/stop")
    messages = collect_ws_messages(client, sid)
    assert len(messages) == 1
    assert messages[0]["type"] == "status"
    assert messages[0]["state"] == "stopped"


def test_ws_unknown_session_rejected(client):
    with pytest.raises(Exception):
        with client.websocket_connect("/sessions/unknown/telemetry"):
            pass


def test_virtual_telemetry_is_labeled_simulation(client):
    record = client.post(
        "/sessions", json={"pattern": dict(SHORT_HOT, duration_ms=200)}
    ).json()
    messages = collect_ws_messages(client, record["session_id"])
    assert all(m["source"] == "simulation" for m in messages if m["type"] == "sample")


# -- telemetry hub unit behavior -----------------------------------------------------


def test_hub_replays_history_to_late_live_subscriber():
    hub = TelemetryHub()
    hub.publish({"n": 1})
    hub.publish({"n": 2})
    sub = hub.subscribe()
    assert sub.replay == [{"n": 1}, {"n": 2}]
    hub.publish({"n": 3})
    assert sub.get(0.1) == {"n": 3}
    hub.close()


def test_hub_terminal_subscriber_gets_final_snapshot_only():
    hub = TelemetryHub()
    hub.publish({"n": 1})
    hub.publish({"type": "status"})
    hub.close()
    sub = hub.subscribe()
    assert sub.replay == [{"type": "status"}]
    assert sub.live is False


def test_hub_drops_slow_subscriber_after_backlog():
    hub = TelemetryHub()
    sub = hub.subscribe()
    for i in range(300):
        hub.publish({"n": i})
    assert sub.dropped
