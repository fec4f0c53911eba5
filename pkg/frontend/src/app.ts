import { LensClient } from "./api";
import { fmt } from "./format";
import { renderExplanations } from "./explanations";
import { renderInputPanel, type InputPanel } from "./inputPanel";
import { renderModelView } from "./modelView";
import { SessionState, debounce, resumScore } from "./state";
import type { ModelPayload } from "./types";

export interface AppOptions {
  debounceMs?: number;
}

/** Wires the what-if loop: every edit re-queries /v1/predict after a
 * short debounce; explanations run on an explicit button because the
 * rule solver is the expensive part.  Stale responses are discarded by
 * request tokens, and a failed request shows a retry banner. */
export class WhatIfApp {
  readonly state = new SessionState();
  private model: ModelPayload | null = null;
  private panel: InputPanel | null = null;
  private readonly debounceMs: number;
  private readonly schedulePredict: () => void;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: LensClient,
    options: AppOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? 250;
    this.schedulePredict = debounce(() => void this.predict(), this.debounceMs);
    this.root.innerHTML = `
      <div class="banner" id="banner" hidden></div>
      <div class="layout">
        <div id="input-root"></div>
        <div class="main">
          <div class="toolbar">
            <button id="preset-demo1">Demo 1</button>
            <button id="preset-observation6">Observation 6</button>
            <button id="explain-button">explain</button>
            <span id="resum-check" class="resum-check"></span>
          </div>
          <div id="model-root"></div>
          <div id="explanations-root"></div>
        </div>
      </div>`;
    this.byId("explain-button").addEventListener("click", () => void this.explain());
    this.byId("preset-demo1").addEventListener("click", () =>
      void this.loadPreset("demo1"),
    );
    this.byId("preset-observation6").addEventListener("click", () =>
      void this.loadPreset("observation6"),
    );
  }

  private byId(id: string): HTMLElement {
    return this.root.querySelector(`#${id}`) as HTMLElement;
  }

  async init(): Promise<void> {
    this.model = await this.client.model();
    this.panel = renderInputPanel(
      this.byId("input-root"),
      this.model,
      () => this.onEdit(),
    );
    renderModelView(this.byId("model-root"), this.model, null);
  }

  /** An edit only schedules work; nothing fires until the debounce
   * window closes, and invalid fields fire nothing at all. */
  onEdit(): void {
    if (!this.panel) return;
    const values = this.panel.readValues();
    if (values === null) return;
    this.state.inputs = values;
    this.schedulePredict();
  }

  async loadPreset(name: string): Promise<void> {
    const preset = await this.client.preset(name);
    this.panel?.setValues(preset.features);
    this.state.inputs = preset.features;
    this.schedulePredict();
  }

  private async predict(): Promise<void> {
    if (!this.model) return;
    const token = this.state.nextPredictToken();
    this.state.pending = true;
    try {
      const payload = await this.client.predict(this.state.inputs);
      if (!this.state.acceptBreakdown(token, payload)) return;
      this.hideBanner();
      renderModelView(
        this.byId("model-root"),
        this.model,
        this.state.breakdown,
        this.state.previousBreakdown,
      );
      this.renderResumCheck();
    } catch (err) {
      this.showBanner(`prediction failed: ${String(err)}`, () => void this.predict());
    } finally {
      this.state.pending = false;
    }
  }

  async explain(): Promise<void> {
    if (!this.model) return;
    const token = this.state.nextExplainToken();
    try {
      const payload = await this.client.explain(this.state.inputs);
      if (!this.state.acceptExplanation(token, payload)) return;
      this.hideBanner();
      renderExplanations(this.byId("explanations-root"), payload);
    } catch (err) {
      this.showBanner(`explanation failed: ${String(err)}`, () => void this.explain());
    }
  }

  /** Display-side audit: contributions must re-sum to the final score. */
  private renderResumCheck(): void {
    const el = this.byId("resum-check");
    const breakdown = this.state.breakdown;
    if (!breakdown) {
      el.textContent = "";
      return;
    }
    const delta = Math.abs(resumScore(breakdown) - breakdown.final_score);
    el.textContent =
      delta <= 0.001 ? `score ${fmt(breakdown.final_score)} ✓` : "re-sum mismatch!";
    el.classList.toggle("resum-bad", delta > 0.001);
  }

  private showBanner(message: string, retry: () => void): void {
    const banner = this.byId("banner");
    banner.hidden = false;
    banner.innerHTML = "";
    banner.append(message, " ");
    const button = document.createElement("button");
    button.textContent = "retry";
    button.addEventListener("click", retry);
    banner.appendChild(button);
  }

  private hideBanner(): void {
    this.byId("banner").hidden = true;
  }
}
