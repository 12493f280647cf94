import type { Store } from "./store.js";

function isTyping(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLInputElement ||
    target instanceof HTMLTextAreaElement ||
    target instanceof HTMLSelectElement
  );
}

/** Keyboard-only review: j/k (or arrows) move the selection, digits 1-5
 * accept the corresponding candidate, `e` focuses the free-text input.
 * Shortcuts are suppressed while a form control has focus. Returns an
 * unbind function. */
export function bindKeyboard(store: Store, root: HTMLElement): () => void {
  const handler = (event: KeyboardEvent): void => {
    if (isTyping(event.target)) {
      if (event.key === "Escape" && event.target instanceof HTMLElement) {
        event.target.blur();
      }
      return;
    }
    switch (event.key) {
      case "j":
      case "ArrowDown":
        event.preventDefault();
        store.moveSelection(1);
        return;
      case "k":
      case "ArrowUp":
        event.preventDefault();
        store.moveSelection(-1);
        return;
      case "e": {
        event.preventDefault();
        const input = root.querySelector<HTMLInputElement>(
          ".card.selected [data-testid=free-text-input]",
        );
        input?.focus();
        return;
      }
      default: {
        const k = Number.parseInt(event.key, 10);
        if (k >= 1 && k <= 5) {
          event.preventDefault();
          void store.submitCandidate(k - 1);
        }
      }
    }
  };
  document.addEventListener("keydown", handler);
  return () => document.removeEventListener("keydown", handler);
}
