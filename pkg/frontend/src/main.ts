import { CurationClient } from "./api.js";
import { ReviewApp } from "./app.js";
import { attachKeyboard } from "./keyboard.js";

function reviewerId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("reviewer");
  if (fromQuery) {
    window.localStorage.setItem("reviewer_id", fromQuery);
    return fromQuery;
  }
  const stored = window.localStorage.getItem("reviewer_id");
  if (stored) return stored;
  const entered = window.prompt("reviewer id:") || `reviewer-${Date.now()}`;
  window.localStorage.setItem("reviewer_id", entered);
  return entered;
}

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const app = new ReviewApp(new CurationClient(""), root, reviewerId());
attachKeyboard(app, document);
void app.loadNext();
