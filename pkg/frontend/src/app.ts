import {
  ApiClient,
  ApiError,
  SessionConfig,
  SessionState,
  StageResult,
} from './api.js';

// Per-stage numbers as the service reported them. Kept only for display;
// the row count of the rendered strip always comes from the server
// transcript, so a lost record degrades to a blank cell, never to a
// made-up number.
interface StageRecord {
  stage: number;
  payoffs: [string, string];
  scores: [string, string];
}

const CHART_W = 320;
const CHART_H = 80;
const SVG_NS = 'http://www.w3.org/2000/svg';

// "3/2" -> 1.5, "-1" -> -1. Pixel placement only; the displayed strings
// stay exactly as the service sent them.
function ratio(s: string): number {
  const [p, q] = s.split('/');
  return q === undefined ? Number(p) : Number(p) / Number(q);
}

export class PlayView {
  state: SessionState | null = null;

  private actions: string[] = [];
  private records: StageRecord[] = [];
  // Confidence the predictor held before the most recently played stage.
  // The service's latest diagnostics describe the upcoming stage; showing
  // those early would leak the engine's read before the human commits, so
  // they are parked here until the next move lands.
  private shownConfidence: number | null = null;
  private heldConfidence = 0;
  private inputLocked = false;
  private inflight: Promise<void> = Promise.resolve();
  private readonly keyListener: (e: KeyboardEvent) => void;

  private readonly banner: HTMLElement;
  private readonly summary: HTMLElement;
  private readonly controls: HTMLElement;
  private readonly strip: HTMLOListElement;
  private readonly chart: SVGSVGElement;
  private readonly gauge: HTMLElement;
  private readonly entropy: HTMLElement;
  private readonly final: HTMLElement;

  constructor(readonly root: HTMLElement, private readonly api: ApiClient) {
    const doc = root.ownerDocument;
    const div = (cls: string): HTMLElement => {
      const el = doc.createElement('div');
      el.className = cls;
      return el;
    };
    this.banner = div('banner hidden');
    this.summary = div('summary');
    this.controls = div('controls');
    this.strip = doc.createElement('ol');
    this.strip.className = 'strip';
    this.chart = doc.createElementNS(SVG_NS, 'svg') as SVGSVGElement;
    this.chart.setAttribute('class', 'chart');
    this.chart.setAttribute('viewBox', `0 0 ${CHART_W} ${CHART_H}`);
    this.gauge = div('gauge');
    this.entropy = div('entropy');
    this.final = div('final hidden');
    root.append(this.banner, this.summary, this.controls, this.strip,
                this.chart, this.gauge, this.entropy, this.final);

    this.keyListener = (e) => this.onKey(e);
    doc.addEventListener('keydown', this.keyListener);
  }

  dispose(): void {
    this.root.ownerDocument.removeEventListener('keydown', this.keyListener);
  }

  async start(config: SessionConfig): Promise<void> {
    try {
      const { games } = await this.api.listGames();
      const info = games.find((g) => g.name === config.game);
      if (!info) {
        throw new ApiError(404, `unknown game '${config.game}'`);
      }
      this.actions = info.actions[1] ?? [];
      this.state = await this.api.createSession(config);
    } catch (err) {
      this.fail(err);
      return;
    }
    this.records = [];
    this.shownConfidence = null;
    this.heldConfidence = this.state.diagnostics.confidence;
    this.inputLocked = false;
    this.hideBanner();
    this.buildControls();
    this.render();
  }

  /** Resolves once every queued move has been played and rendered. */
  settled(): Promise<void> {
    return this.inflight;
  }

  submit(action: string): Promise<void> {
    this.inflight = this.inflight.then(() => this.playStage(action));
    return this.inflight;
  }

  private onKey(e: KeyboardEvent): void {
    if (e.key.length !== 1) {
      return;
    }
    const label = this.actions.find(
      (a) => a.toUpperCase() === e.key.toUpperCase());
    if (label !== undefined) {
      void this.submit(label);
    }
  }

  private async playStage(action: string): Promise<void> {
    if (!this.state || this.state.finished || this.inputLocked) {
      return;
    }
    let result: StageResult;
    try {
      result = await this.api.submitMove(this.state.id, action);
      this.state = await this.api.getState(this.state.id);
    } catch (err) {
      this.fail(err);
      return;
    }
    this.records.push({
      stage: result.stage,
      payoffs: result.payoffs,
      scores: result.scores,
    });
    this.shownConfidence = this.heldConfidence;
    this.heldConfidence = result.diagnostics.confidence;
    this.hideBanner();
    this.render();
  }

  private fail(err: unknown): void {
    const message = err instanceof Error ? err.message : String(err);
    this.banner.textContent = message;
    this.banner.classList.remove('hidden');
    // A rejected fetch means the service is unreachable; a 409 means the
    // session is already over. Either way further input is pointless.
    if (!(err instanceof ApiError) || err.status === 409) {
      this.inputLocked = true;
      this.setButtonsEnabled(false);
    }
  }

  private hideBanner(): void {
    this.banner.textContent = '';
    this.banner.classList.add('hidden');
  }

  private buildControls(): void {
    this.controls.replaceChildren();
    for (const label of this.actions) {
      const button = this.root.ownerDocument.createElement('button');
      button.textContent = label;
      button.dataset.action = label;
      button.addEventListener('click', () => void this.submit(label));
      this.controls.append(button);
    }
  }

  private setButtonsEnabled(enabled: boolean): void {
    for (const button of this.controls.querySelectorAll('button')) {
      button.disabled = !enabled;
    }
  }

  private render(): void {
    const state = this.state;
    if (!state) {
      return;
    }
    const played = state.transcript.length;
    const engineKind = String(state.engine.kind ?? 'engine');
    this.summary.textContent =
      `${state.game} · stage ${played}/${state.n} · vs ${engineKind}` +
      ` · you ${state.scores[1]} · engine ${state.scores[0]}`;

    this.renderStrip(state);
    this.renderChart(state);

    this.gauge.textContent = this.shownConfidence === null
      ? 'predictor confidence: –'
      : `predictor confidence: ${(this.shownConfidence * 100).toFixed(0)}%`;
    this.entropy.textContent = 'your entropy estimate: ' +
      `${state.diagnostics.human_entropy_estimate.toFixed(3)} bits/move`;

    if (state.finished) {
      this.inputLocked = true;
      this.final.textContent =
        `session complete · you ${state.scores[1]}` +
        ` · engine ${state.scores[0]} · entropy ` +
        `${state.diagnostics.human_entropy_estimate.toFixed(3)} bits/move`;
      this.final.classList.remove('hidden');
    }
    this.setButtonsEnabled(!state.finished && !this.inputLocked);
  }

  private renderStrip(state: SessionState): void {
    const doc = this.root.ownerDocument;
    this.strip.replaceChildren();
    state.transcript.forEach(([engineAction, humanAction], i) => {
      const record = this.records.find((r) => r.stage === i + 1);
      const li = doc.createElement('li');
      li.textContent = `#${i + 1} you ${humanAction}` +
        ` · engine ${engineAction}` +
        ` · payoff ${record ? record.payoffs[1] : '·'}`;
      this.strip.append(li);
    });
  }

  private renderChart(state: SessionState): void {
    const doc = this.root.ownerDocument;
    this.chart.replaceChildren();
    const axis = doc.createElementNS(SVG_NS, 'line');
    axis.setAttribute('x1', '0');
    axis.setAttribute('x2', String(CHART_W));
    axis.setAttribute('y1', String(CHART_H / 2));
    axis.setAttribute('y2', String(CHART_H / 2));
    axis.setAttribute('class', 'axis');
    this.chart.append(axis);

    const span = Math.max(
      1, ...this.records.flatMap((r) => r.scores.map((s) => Math.abs(ratio(s)))));
    for (const player of [0, 1] as const) {
      const points = [`0,${CHART_H / 2}`];
      for (const record of this.records) {
        const x = (record.stage / state.n) * CHART_W;
        const y = CHART_H / 2 -
          (ratio(record.scores[player]) / span) * (CHART_H / 2 - 2);
        points.push(`${x.toFixed(1)},${y.toFixed(1)}`);
      }
      const line = doc.createElementNS(SVG_NS, 'polyline');
      line.setAttribute('class', player === 0 ? 'engine-line' : 'human-line');
      line.setAttribute('fill', 'none');
      line.setAttribute('points', points.join(' '));
      this.chart.append(line);
    }
  }
}
