// Wizard state machine for the layer-by-layer builder.
//
// The central invariant: add controls are derived only from the most recent
// admissible-next response, so the UI can never offer a pair the server
// would refuse. Every refresh and mutation is recorded in a session log the
// tests replay to check the invariant.

import {
  ApiClient,
  InadmissibleLayerError,
  LayerChoice,
  PairInfo,
  PatternData,
  SmokeResult,
} from "./api.js";

export interface LogEntry {
  action: "refresh" | "add" | "undo" | "reject";
  offered: string[]; // pair ids the server returned at this point
  rendered: string[]; // pair ids the UI rendered add controls for
  detail?: string;
}

export interface WizardState {
  group: string | null;
  sessionId: string | null;
  layers: LayerChoice[][];
  options: PairInfo[];
  strictDecrease: boolean;
  lastRejection: string | null;
  lastSmoke: SmokeResult | null;
}

export class BuilderWizard {
  state: WizardState = {
    group: null,
    sessionId: null,
    layers: [],
    options: [],
    strictDecrease: false,
    lastRejection: null,
    lastSmoke: null,
  };
  log: LogEntry[] = [];
  private patternCache = new Map<string, PatternData>();

  constructor(private api: ApiClient) {}

  async chooseGroup(group: string): Promise<void> {
    const session = await this.api.createSession(group);
    this.state.group = group;
    this.state.sessionId = session.id;
    this.state.layers = [];
    this.patternCache.clear();
    await this.refreshOptions();
  }

  /** Pairs the UI draws add controls for: exactly the server's offers. */
  addControls(): PairInfo[] {
    return this.state.options;
  }

  async refreshOptions(): Promise<void> {
    if (!this.state.sessionId) throw new Error("no session");
    const options = await this.api.admissibleNext(
      this.state.sessionId,
      this.state.strictDecrease
    );
    this.state.options = options;
    this.logSnapshot("refresh");
  }

  private logSnapshot(action: LogEntry["action"], detail?: string) {
    this.log.push({
      action,
      offered: this.state.options.map((p) => p.id),
      rendered: this.addControls().map((p) => p.id),
      detail,
    });
  }

  /** Badge text shown next to each control. */
  badge(pair: PairInfo): string {
    return `deg ${pair.degree} · type ${pair.type}`;
  }

  /** Tooltip explaining why the pair is offered. */
  phiTooltip(pair: PairInfo): string {
    return (
      `phi(H, K) = K holds: the admissibility subgroup has exactly ` +
      `${pair.order_K} elements (|H| = ${pair.order_H}, index ${pair.type})`
    );
  }

  async addLayer(choices: LayerChoice[]): Promise<boolean> {
    if (!this.state.sessionId) throw new Error("no session");
    const offered = new Set(this.state.options.map((p) => p.id));
    for (const c of choices) {
      if (!offered.has(c.id)) {
        throw new Error(`pair ${c.id} is not offered by the server`);
      }
    }
    try {
      const session = await this.api.addLayer(this.state.sessionId, choices);
      this.state.layers = session.layers;
      this.state.lastRejection = null;
      this.logSnapshot("add");
      await this.refreshOptions();
      return true;
    } catch (e) {
      if (e instanceof InadmissibleLayerError) {
        this.state.lastRejection = e.message;
        this.logSnapshot("reject", e.message);
        return false;
      }
      throw e;
    }
  }

  async undo(): Promise<void> {
    if (!this.state.sessionId) throw new Error("no session");
    const session = await this.api.undoLayer(this.state.sessionId);
    this.state.layers = session.layers;
    this.logSnapshot("undo");
    await this.refreshOptions();
  }

  async exportSpec(): Promise<string> {
    if (!this.state.sessionId) throw new Error("no session");
    return this.api.exportSpec(this.state.sessionId);
  }

  async runSmoke(): Promise<SmokeResult> {
    if (!this.state.sessionId) throw new Error("no session");
    const result = await this.api.smoke(this.state.sessionId);
    this.state.lastSmoke = result;
    return result;
  }

  async patternFor(pairId: string): Promise<PatternData> {
    if (!this.state.group) throw new Error("no group");
    const hit = this.patternCache.get(pairId);
    if (hit) return hit;
    const data = await this.api.pattern(this.state.group, pairId);
    this.patternCache.set(pairId, data);
    return data;
  }
}

/** Replay a recorded log and confirm the rendered controls never exceeded
 * the server's offers. */
export function controlsAlwaysOffered(log: LogEntry[]): boolean {
  return log.every((entry) => {
    const offered = new Set(entry.offered);
    return entry.rendered.every((id) => offered.has(id));
  });
}
