export * from './api.js';
export * from './composer.js';
export * from './debounce.js';
export * from './ui.js';

import { SuggestClient } from './api.js';
import { CompositionController } from './composer.js';
import { mountComposeView } from './ui.js';

/** Wire up the compose view against a running suggestion service. */
export function bootstrap(root: HTMLElement, baseUrl: string): CompositionController {
  const controller = new CompositionController(new SuggestClient(baseUrl));
  mountComposeView(root, controller);
  return controller;
}
