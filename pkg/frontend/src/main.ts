import { ApiClient } from "./api.js";
import { bindKeyboard } from "./keyboard.js";
import { Store } from "./store.js";
import { render } from "./view.js";

export interface AppOptions {
  baseUrl?: string;
  /** queue refresh interval in ms; 0 disables polling */
  pollIntervalMs?: number;
  fetchFn?: typeof fetch;
}

export interface App {
  store: Store;
  api: ApiClient;
  stop: () => void;
}

export const DEFAULT_POLL_MS = 5000;

/** Mount the review client onto `root` and start polling the service. */
export function createApp(root: HTMLElement, options: AppOptions = {}): App {
  const api = new ApiClient(
    options.baseUrl ?? "",
    options.fetchFn ? (input, init) => options.fetchFn!(input, init) : undefined,
  );
  const store = new Store(api);
  store.subscribe((state) => render(root, state, store, api));
  const unbindKeys = bindKeyboard(store, root);
  void store.refresh();
  const interval = options.pollIntervalMs ?? DEFAULT_POLL_MS;
  const timer = interval > 0 ? setInterval(() => void store.refresh(), interval) : null;
  return {
    store,
    api,
    stop: () => {
      if (timer !== null) clearInterval(timer);
      unbindKeys();
    },
  };
}

declare global {
  interface Window {
    __FTR_APP__?: App;
  }
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    window.__FTR_APP__ = createApp(root);
  }
}
