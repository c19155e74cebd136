import { afterEach, describe, expect, it } from 'vitest';
import { ApiClient } from '../src/api.js';
import { PlayView } from '../src/app.js';

interface ScriptedStage {
  engine: string;
  payoffs: [string, string];
  scores: [string, string];
  confidence: number;
  entropy: number;
}

// In-memory stand-in for the play service. The scripted payoffs are
// deliberately NOT matching-pennies numbers: if the UI computed payoffs
// itself the rendered values would disagree with these and the verbatim
// assertions below would catch it.
class StubService {
  requests: { url: string; body: string | null }[] = [];
  moves: string[] = [];
  failNext: 'network' | { status: number; detail: string } | null = null;

  constructor(readonly script: ScriptedStage[], readonly n: number,
              readonly createConfidence: number) {}

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), { status });
  }

  private state() {
    const played = this.moves.length;
    const last = played > 0 ? this.script[played - 1]! : null;
    return {
      id: 'sess1',
      game: 'matching-pennies',
      n: this.n,
      engine: { kind: 'predictor', context_length: 1, tau: 0.9 },
      transcript: this.moves.map((m, i) => [this.script[i]!.engine, m]),
      scores: last ? last.scores : ['0', '0'],
      remaining: this.n - played,
      finished: played >= this.n,
      diagnostics: {
        confidence: last ? last.confidence : this.createConfidence,
        human_entropy_estimate: last ? last.entropy : 0.0,
        stages_played: played,
      },
    };
  }

  fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    this.requests.push({ url, body: (init?.body as string) ?? null });
    if (url.endsWith('/api/games')) {
      return this.json(200, {
        games: [{ name: 'matching-pennies', players: 2,
                  actions: [['H', 'T'], ['H', 'T']], zero_sum: true }],
      });
    }
    if (url.endsWith('/move')) {
      if (this.failNext === 'network') {
        this.failNext = null;
        throw new TypeError('fetch failed');
      }
      if (this.failNext) {
        const { status, detail } = this.failNext;
        this.failNext = null;
        return this.json(status, { detail });
      }
      const stage = this.script[this.moves.length]!;
      this.moves.push(JSON.parse((init?.body as string) ?? '{}').action);
      return this.json(200, {
        stage: this.moves.length,
        engine_action: stage.engine,
        human_action: this.moves[this.moves.length - 1],
        payoffs: stage.payoffs,
        scores: stage.scores,
        finished: this.moves.length >= this.n,
        diagnostics: {
          confidence: stage.confidence,
          human_entropy_estimate: stage.entropy,
          stages_played: this.moves.length,
        },
      });
    }
    if (url.endsWith('/api/session')) {
      return this.json(201, this.state());
    }
    return this.json(200, this.state());
  };
}

const SCRIPT: ScriptedStage[] = [
  { engine: 'T', payoffs: ['-7/3', '7/3'], scores: ['-7/3', '7/3'],
    confidence: 0.93, entropy: 0.0 },
  { engine: 'H', payoffs: ['5', '-5'], scores: ['8/3', '-8/3'],
    confidence: 0.99, entropy: 1.0 },
];

let active: { view: PlayView; root: HTMLElement } | null = null;

async function setup(n = 3): Promise<{ stub: StubService; view: PlayView;
                                       root: HTMLElement }> {
  const stub = new StubService(SCRIPT, n, 0.77);
  const root = document.createElement('div');
  document.body.append(root);
  const view = new PlayView(root, new ApiClient('http://svc', stub.fetchFn));
  await view.start({ game: 'matching-pennies', n });
  active = { view, root };
  return { stub, view, root };
}

afterEach(() => {
  if (active) {
    active.view.dispose();
    active.root.remove();
    active = null;
  }
});

function moveRequests(stub: StubService) {
  return stub.requests.filter((r) => r.url.endsWith('/move'));
}

describe('PlayView', () => {
  it('renders both actions and the service payoff after a click', async () => {
    const { stub, view, root } = await setup();
    (root.querySelector('button[data-action="H"]') as HTMLButtonElement).click();
    await view.settled();
    const rows = root.querySelectorAll('.strip li');
    expect(rows).toHaveLength(1);
    expect(rows[0]!.textContent).toContain('you H');
    expect(rows[0]!.textContent).toContain('engine T');
    expect(rows[0]!.textContent).toContain('payoff 7/3');
    expect(root.querySelector('.summary')!.textContent).toContain('you 7/3');
    expect(root.querySelector('.summary')!.textContent)
      .toContain('engine -7/3');
    expect(stub.moves).toEqual(['H']);
  });

  it('sends identical requests for keyboard and click input', async () => {
    const { stub, view, root } = await setup();
    (root.querySelector('button[data-action="H"]') as HTMLButtonElement).click();
    await view.settled();
    document.dispatchEvent(new KeyboardEvent('keydown', { key: 'h' }));
    await view.settled();
    const [byClick, byKey] = moveRequests(stub);
    expect(byKey).toEqual(byClick);
  });

  it('keeps the rendered history in step with the server transcript', async () => {
    const { stub, view, root } = await setup();
    await view.submit('H');
    await view.submit('T');
    const rows = root.querySelectorAll('.strip li');
    expect(rows).toHaveLength(stub.moves.length);
    expect(rows).toHaveLength(2);
  });

  it('shows the final panel and ignores input once finished', async () => {
    const { stub, view, root } = await setup(2);
    await view.submit('H');
    await view.submit('T');
    const final = root.querySelector('.final')!;
    expect(final.classList.contains('hidden')).toBe(false);
    expect(final.textContent).toContain('you -8/3');
    expect(final.textContent).toContain('engine 8/3');
    expect(final.textContent).toContain('bits/move');
    const before = moveRequests(stub).length;
    document.dispatchEvent(new KeyboardEvent('keydown', { key: 'h' }));
    await view.settled();
    expect(moveRequests(stub)).toHaveLength(before);
    const button = root.querySelector('button') as HTMLButtonElement;
    expect(button.disabled).toBe(true);
  });

  it('surfaces service errors verbatim and recovers on success', async () => {
    const { stub, view, root } = await setup();
    stub.failNext = { status: 400, detail: "invalid action 'X'; one of H, T" };
    await view.submit('H');
    const banner = root.querySelector('.banner')!;
    expect(banner.classList.contains('hidden')).toBe(false);
    expect(banner.textContent).toBe("invalid action 'X'; one of H, T");
    expect((root.querySelector('button') as HTMLButtonElement).disabled)
      .toBe(false);
    await view.submit('H');
    expect(banner.classList.contains('hidden')).toBe(true);
  });

  it('disables input when the service is unreachable', async () => {
    const { stub, view, root } = await setup();
    stub.failNext = 'network';
    await view.submit('H');
    const banner = root.querySelector('.banner')!;
    expect(banner.classList.contains('hidden')).toBe(false);
    expect(banner.textContent).toBe('fetch failed');
    expect((root.querySelector('button') as HTMLButtonElement).disabled)
      .toBe(true);
    const before = moveRequests(stub).length;
    await view.submit('H');
    expect(moveRequests(stub)).toHaveLength(before);
  });

  it('shows the confidence the engine held before the stage, not after', async () => {
    const { view, root } = await setup();
    const gauge = root.querySelector('.gauge')!;
    expect(gauge.textContent).toContain('–');
    await view.submit('H');
    expect(gauge.textContent).toContain('77%');
    await view.submit('T');
    expect(gauge.textContent).toContain('93%');
  });
});
