"""RIPE Atlas measurement client: pulls ping results for configured
measurements, reduces each vantage-point pair to its window-minimum RTT,
and emits the measurement JSON schema.

Never used by the test or acceptance suites against the network; tests
inject canned responses through the session argument.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import requests

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://atlas.ripe.net/api/v2"
API_KEY_ENV = "ATLAS_API_KEY"


class FetchError(RuntimeError):
    pass


@dataclass
class AtlasConfig:
    """Parsed fetch configuration.

    JSON schema:
      {"vantage_points": [{"id", "name", "lat", "lon",
                           "probe_id": int, "addresses": [str, ...]}],
       "measurement_ids": [int, ...],
       "start": unix-seconds, "stop": unix-seconds,
       "base_url": optional}
    """

    vantage_points: list
    measurement_ids: list
    start: Optional[int] = None
    stop: Optional[int] = None
    base_url: str = DEFAULT_BASE_URL
    probe_to_vp: dict = field(init=False)
    addr_to_vp: dict = field(init=False)

    def __post_init__(self):
        self.probe_to_vp = {}
        self.addr_to_vp = {}
        for vp in self.vantage_points:
            if "probe_id" in vp:
                self.probe_to_vp[int(vp["probe_id"])] = vp["id"]
            for addr in vp.get("addresses", []):
                self.addr_to_vp[addr] = vp["id"]

    @classmethod
    def from_file(cls, path) -> "AtlasConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(vantage_points=doc["vantage_points"],
                   measurement_ids=doc["measurement_ids"],
                   start=doc.get("start"), stop=doc.get("stop"),
                   base_url=doc.get("base_url", DEFAULT_BASE_URL))


def _result_rtts(entry: dict) -> list[float]:
    """Positive RTT samples from one ping result record."""
    rtts = []
    explicit_min = entry.get("min")
    if isinstance(explicit_min, (int, float)) and explicit_min > 0:
        rtts.append(float(explicit_min))
    for sample in entry.get("result", []):
        rtt = sample.get("rtt") if isinstance(sample, dict) else None
        if isinstance(rtt, (int, float)) and rtt > 0:
            rtts.append(float(rtt))
    return rtts


def _get_with_backoff(session, url, params, headers, max_tries=5, base_delay=1.0,
                      sleep=time.sleep):
    for attempt in range(max_tries):
        response = session.get(url, params=params, headers=headers, timeout=60)
        if response.status_code == 200:
            return response
        if response.status_code in (429, 500, 502, 503, 504):
            delay = base_delay * (2 ** attempt)
            logger.warning("atlas returned %s for %s; retrying in %.0fs",
                           response.status_code, url, delay)
            sleep(delay)
            continue
        raise FetchError(f"atlas request failed: {response.status_code} {url}")
    raise FetchError(f"rate-limit backoff exhausted for {url}")


def fetch_measurements(config: AtlasConfig, session=None,
                       api_key: Optional[str] = None, sleep=time.sleep) -> dict:
    """Fetch ping results and reduce to per-pair minimum RTTs.

    Returns the measurement document (the same schema load_measurements
    parses). Pairs without a single successful ping are omitted with a
    warning.
    """
    session = session or requests.Session()
    api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
    headers = {"Authorization": f"Key {api_key}"} if api_key else {}

    minima: dict[tuple[str, str], float] = {}
    seen_pairs: set[tuple[str, str]] = set()
    for mid in config.measurement_ids:
        url = f"{config.base_url}/measurements/{mid}/results/"
        params = {"format": "json"}
        if config.start is not None:
            params["start"] = config.start
        if config.stop is not None:
            params["stop"] = config.stop
        response = _get_with_backoff(session, url, params, headers, sleep=sleep)
        try:
            entries = response.json()
        except ValueError as exc:
            raise FetchError(f"measurement {mid}: invalid JSON body") from exc
        for entry in entries:
            src = config.probe_to_vp.get(entry.get("prb_id"))
            dst = config.addr_to_vp.get(entry.get("dst_addr"))
            if src is None or dst is None or src == dst:
                continue
            pair = (src, dst) if src <= dst else (dst, src)
            seen_pairs.add(pair)
            rtts = _result_rtts(entry)
            if not rtts:
                continue
            low = min(rtts)
            if pair not in minima or low < minima[pair]:
                minima[pair] = low

    for pair in sorted(seen_pairs - set(minima)):
        logger.warning("pair %s-%s had no successful pings; omitted", *pair)

    return {
        "vantage_points": [
            {"id": vp["id"], "name": vp.get("name", vp["id"]),
             "lat": vp["lat"], "lon": vp["lon"]}
            for vp in config.vantage_points
        ],
        "measurements": [
            {"src": a, "dst": b, "rtt_ms": rtt}
            for (a, b), rtt in sorted(minima.items())
        ],
    }
