import { ApiClient } from './api.js';
import { PlayView } from './app.js';

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app element');
}

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get('api') ?? window.location.origin);
const view = new PlayView(root, api);

void view.start({
  game: params.get('game') ?? 'matching-pennies',
  n: Number(params.get('n') ?? '50'),
  engineSeed: params.has('seed') ? Number(params.get('seed')) : undefined,
});
