import { readFileSync, readdirSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { FetchLike } from "../src/api";
import { GeodesicResponse, ManifoldArtifact, ManifoldListEntry } from "../src/types";

const TESTDATA = join(dirname(fileURLToPath(import.meta.url)), "..", "testdata");

export function loadJson<T>(name: string): T {
  return JSON.parse(readFileSync(join(TESTDATA, name), "utf-8")) as T;
}

export function loadArtifacts(): Map<string, ManifoldArtifact> {
  const out = new Map<string, ManifoldArtifact>();
  for (const file of readdirSync(join(TESTDATA, "artifacts"))) {
    const artifact = loadJson<ManifoldArtifact>(join("artifacts", file));
    out.set(artifact.id, artifact);
  }
  return out;
}

export interface RecordedExchange {
  url: string;
  status: number;
  body: unknown;
}

/** File-backed stand-in for the manifold service that implements the same
 * endpoint contract and records every exchange, so tests can assert that
 * displayed values came over the wire untouched. */
export class FakeService {
  readonly listing: ManifoldListEntry[] = loadJson("manifolds.json");
  readonly artifacts = loadArtifacts();
  readonly geodesics = new Map<string, GeodesicResponse>();
  readonly exchanges: RecordedExchange[] = [];

  constructor() {
    const g1 = loadJson<GeodesicResponse>("geodesic_a0_c0.json");
    this.geodesics.set(`eps5_lam0.001|a0|c0`, g1);
    const g2 = loadJson<GeodesicResponse>("geodesic_eps12_a0_b0.json");
    this.geodesics.set(`eps12_lam0.001|a0|b0`, g2);
  }

  fetch: FetchLike = async (url: string) => {
    const respond = (status: number, body: unknown) => {
      this.exchanges.push({ url, status, body });
      return {
        ok: status === 200,
        status,
        json: async () => JSON.parse(JSON.stringify(body)),
      };
    };
    if (url === "/manifolds") {
      return respond(200, this.listing);
    }
    const geodesic = url.match(/^\/manifold\/([^/]+)\/geodesic\?(.*)$/);
    if (geodesic) {
      const id = decodeURIComponent(geodesic[1]);
      const params = new URLSearchParams(geodesic[2]);
      const src = params.get("src");
      const dst = params.get("dst");
      if (!this.artifacts.has(id)) return respond(404, { error: "unknown artifact" });
      if (!src || !dst) return respond(400, { error: "src and dst required" });
      const canned =
        this.geodesics.get(`${id}|${src}|${dst}`) ??
        this.geodesics.get(`${id}|${dst}|${src}`);
      if (!canned) return respond(404, { error: "no canned geodesic for pair" });
      return respond(200, canned);
    }
    const manifold = url.match(/^\/manifold\/([^/?]+)$/);
    if (manifold) {
      const id = decodeURIComponent(manifold[1]);
      const artifact = this.artifacts.get(id);
      if (!artifact) return respond(404, { error: "unknown artifact" });
      return respond(200, artifact);
    }
    return respond(404, { error: `unroutable ${url}` });
  };
}
