// Typed client for the builder service. All group theory stays server-side;
// this module only moves JSON.

export interface GroupInfo {
  name: string;
  order: number;
  degree: number;
}

export interface PairInfo {
  id: string;
  H: number[];
  K: number[];
  degree: number;
  type: number;
  order_H: number;
  order_K: number;
}

export interface LayerChoice {
  id: string;
  mult: number;
}

export interface SessionState {
  id: string;
  group: string;
  layers: { id: string; mult: number }[][];
  created: number;
  updated: number;
}

export interface PhiRejection {
  failing_layer: number;
  phi_subgroup: number[];
  expected_K: number[];
}

export interface PatternData {
  shape: [number, number];
  matrices: [number, number, number][][];
}

export interface SmokeResult {
  invariance_deviation: number;
  admissible: boolean;
}

export class InadmissibleLayerError extends Error {
  constructor(public detail: PhiRejection) {
    super(
      `layer ${detail.failing_layer} fails: phi has ${detail.phi_subgroup.length} elements, ` +
        `expected the ${detail.expected_K.length}-element kernel subgroup`
    );
  }
}

export class ApiClient {
  constructor(private base: string) {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.base + path);
    if (!res.ok) throw new Error(`GET ${path}: ${res.status}`);
    return res.json() as Promise<T>;
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (res.status === 409) {
      const payload = await res.json();
      throw new InadmissibleLayerError(payload.detail as PhiRejection);
    }
    if (!res.ok) throw new Error(`${method} ${path}: ${res.status}`);
    return res.json() as Promise<T>;
  }

  groups(): Promise<GroupInfo[]> {
    return this.get("/api/groups");
  }

  groupPairs(group: string): Promise<PairInfo[]> {
    return this.get(`/api/groups/${encodeURIComponent(group)}/pairs`);
  }

  createSession(group: string): Promise<SessionState> {
    return this.send("POST", "/api/sessions", { group });
  }

  session(id: string): Promise<SessionState> {
    return this.get(`/api/sessions/${id}`);
  }

  admissibleNext(id: string, strictDecrease = false): Promise<PairInfo[]> {
    const q = strictDecrease ? "?strict_decrease=true" : "";
    return this.get(`/api/sessions/${id}/admissible-next${q}`);
  }

  addLayer(id: string, pairs: LayerChoice[]): Promise<SessionState> {
    return this.send("POST", `/api/sessions/${id}/layers`, { pairs });
  }

  undoLayer(id: string): Promise<SessionState> {
    return this.send("DELETE", `/api/sessions/${id}/layers/last`);
  }

  /** Raw export body; kept as the exact bytes the server produced. */
  async exportSpec(id: string): Promise<string> {
    const res = await fetch(`${this.base}/api/sessions/${id}/export`);
    if (res.status === 409) {
      const payload = await res.json();
      throw new InadmissibleLayerError(payload.detail as PhiRejection);
    }
    if (!res.ok) throw new Error(`export: ${res.status}`);
    return res.text();
  }

  pattern(group: string, pairId: string): Promise<PatternData> {
    return this.get(
      `/api/pairs/${encodeURIComponent(group)}/${encodeURIComponent(pairId)}/pattern`
    );
  }

  smoke(id: string): Promise<SmokeResult> {
    return this.send("POST", `/api/sessions/${id}/smoke`);
  }
}
