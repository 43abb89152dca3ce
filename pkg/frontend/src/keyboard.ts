// Single-key review controls; throughput matters when a paper means dozens
// of samples. Keystrokes inside form fields are never captured.

import type { ReviewApp } from "./app.js";

export const DEFAULT_KEYMAP: Record<string, string> = {
  "1": "rubric-q1",
  "2": "rubric-q2",
  "3": "rubric-q3",
  "4": "rubric-q4",
  a: "accept",
  r: "reject",
  e: "edit",
  n: "next",
  "?": "overlay",
};

export function attachKeyboard(
  app: ReviewApp,
  target: Pick<Document, "addEventListener" | "removeEventListener">,
  keymap: Record<string, string> = DEFAULT_KEYMAP,
): () => void {
  const onKeyDown = (event: Event): void => {
    const keyboardEvent = event as KeyboardEvent;
    const element = keyboardEvent.target as HTMLElement | null;
    if (
      element &&
      (element.tagName === "TEXTAREA" || element.tagName === "INPUT")
    ) {
      return;
    }
    const action = keymap[keyboardEvent.key];
    if (!action) return;
    keyboardEvent.preventDefault();
    switch (action) {
      case "rubric-q1":
        return app.toggleRubric("q1");
      case "rubric-q2":
        return app.toggleRubric("q2");
      case "rubric-q3":
        return app.toggleRubric("q3");
      case "rubric-q4":
        return app.toggleRubric("q4");
      case "accept":
        void app.accept();
        return;
      case "reject":
        void app.reject();
        return;
      case "edit":
        return app.toggleEdit();
      case "next":
        void app.loadNext();
        return;
      case "overlay":
        return app.toggleOverlay();
    }
  };
  target.addEventListener("keydown", onKeyDown);
  return () => target.removeEventListener("keydown", onKeyDown);
}
