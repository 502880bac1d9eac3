import { GeodesicResponse, ManifoldArtifact, ManifoldListEntry } from "./types";

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ServiceError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

/** Thin client over the manifold service. The fetch implementation is
 * injectable so tests can intercept every request and record responses. */
export class ManifoldClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url) => fetch(url),
  ) {}

  private async get(path: string): Promise<unknown> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      throw new ServiceError(response.status, `GET ${path} -> ${response.status}`);
    }
    return response.json();
  }

  listManifolds(): Promise<ManifoldListEntry[]> {
    return this.get("/manifolds") as Promise<ManifoldListEntry[]>;
  }

  getManifold(id: string): Promise<ManifoldArtifact> {
    return this.get(`/manifold/${encodeURIComponent(id)}`) as Promise<ManifoldArtifact>;
  }

  getGeodesic(
    id: string,
    src: string,
    dst: string,
    subdivision = 4,
  ): Promise<GeodesicResponse> {
    const params = new URLSearchParams({ src, dst, s: String(subdivision) });
    return this.get(
      `/manifold/${encodeURIComponent(id)}/geodesic?${params}`,
    ) as Promise<GeodesicResponse>;
  }
}
