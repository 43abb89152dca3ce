// Full re-render of the review screen from ReviewViewState. Plain DOM, no
// framework; ids are stable hooks for tests and keyboard handlers.

import { diffLines } from "./diff.js";
import { renderMath, renderRichText } from "./math.js";
import {
  RUBRIC_KEYS,
  RUBRIC_LABELS,
  type ReviewViewState,
  type RubricKey,
  canAccept,
} from "./state.js";

export interface ViewHandlers {
  onToggleRubric(key: RubricKey): void;
  onAccept(): void;
  onReject(): void;
  onToggleEdit(): void;
  onEditInput(field: "question" | "answer", value: string): void;
  onSubmitEdit(): void;
  onLoadNext(): void;
  onRetryWithLatest(): void;
  onTakeLatest(): void;
  onToggleOverlay(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

const KEYMAP_ROWS: [string, string][] = [
  ["1 / 2 / 3 / 4", "toggle rubric answers (unset > yes > no)"],
  ["a", "accept (enabled only when all four are yes)"],
  ["r", "reject"],
  ["e", "open or close the editor"],
  ["n", "load next sample"],
  ["?", "show or hide this overlay"],
];

export function render(
  root: HTMLElement,
  state: ReviewViewState,
  handlers: ViewHandlers,
  overlayVisible: boolean,
): void {
  root.textContent = "";
  const app = el("div", { class: "app" });
  root.appendChild(app);

  const header = el("header", {});
  header.appendChild(el("strong", {}, "derivation review"));
  header.appendChild(
    el("span", { id: "reviewer-tag" }, ` reviewer: ${state.reviewerId}`),
  );
  header.appendChild(
    el("span", { id: "reviewed-count" }, ` reviewed this session: ${state.reviewedCount}`),
  );
  const overlayButton = el("button", { id: "overlay-btn", type: "button" }, "keys (?)");
  overlayButton.onclick = handlers.onToggleOverlay;
  header.appendChild(overlayButton);
  app.appendChild(header);

  if (overlayVisible) {
    const overlay = el("div", { id: "overlay", role: "dialog" });
    overlay.appendChild(el("h2", {}, "Keyboard bindings"));
    const table = el("table", {});
    for (const [keys, what] of KEYMAP_ROWS) {
      const row = el("tr", {});
      row.appendChild(el("td", { class: "key" }, keys));
      row.appendChild(el("td", {}, what));
      table.appendChild(row);
    }
    overlay.appendChild(table);
    app.appendChild(overlay);
  }

  if (state.status === "unreachable") {
    const banner = el("div", { id: "banner", class: "banner" });
    banner.appendChild(el("span", {}, "curation service unreachable "));
    const retry = el("button", { id: "retry-btn", type: "button" }, "retry");
    retry.onclick = handlers.onLoadNext;
    banner.appendChild(retry);
    app.appendChild(banner);
    return;
  }

  if (state.status === "queue-empty") {
    const empty = el("div", { id: "queue-empty" }, "no samples pending review");
    const again = el("button", { id: "retry-btn", type: "button" }, "check again");
    again.onclick = handlers.onLoadNext;
    empty.appendChild(again);
    app.appendChild(empty);
    return;
  }

  if (state.status === "conflict" && state.conflict) {
    app.appendChild(renderConflict(state, handlers));
    return;
  }

  if (!state.sample) {
    app.appendChild(el("div", { id: "loading" }, "loading..."));
    return;
  }

  app.appendChild(renderSample(state, handlers));
}

function renderSample(state: ReviewViewState, handlers: ViewHandlers): HTMLElement {
  const sample = state.sample!;
  const main = el("main", { id: "sample-view" });

  const provenance = el("section", { id: "provenance" });
  provenance.appendChild(
    el("span", {}, `paper ${sample.paper_id} / ${sample.expression.kind} ` +
      `${sample.expression.number_label ?? sample.expression.expr_id}`),
  );
  provenance.appendChild(
    el("span", { id: "version-tag" }, ` v${sample.version} (${sample.stage})`),
  );
  if (sample.flags.length) {
    provenance.appendChild(
      el("span", { id: "flags", class: "flags" }, ` flags: ${sample.flags.join(", ")}`),
    );
  }
  const expressionBox = el("div", { id: "expression", class: "expression" });
  renderMath(expressionBox, sample.expression.latex, true);
  provenance.appendChild(expressionBox);
  main.appendChild(provenance);

  const question = el("section", { id: "question" });
  question.appendChild(el("h3", {}, "Question"));
  const questionBody = el("div", { class: "body" });
  renderRichText(questionBody, sample.question ?? "(no question)");
  question.appendChild(questionBody);
  main.appendChild(question);

  const answer = el("section", { id: "answer" });
  answer.appendChild(el("h3", {}, "Answer"));
  const answerBody = el("div", { class: "body" });
  renderRichText(answerBody, sample.answer ?? "(no answer)");
  answer.appendChild(answerBody);
  main.appendChild(answer);

  const evidence = el("details", { id: "evidence" });
  evidence.appendChild(
    el("summary", {}, `evidence (${sample.evidence?.length ?? 0})`),
  );
  for (const snippet of sample.evidence ?? []) {
    const item = el("div", { class: "snippet" });
    const body = el("div", {});
    renderRichText(body, snippet.text);
    item.appendChild(body);
    item.appendChild(el("small", {}, snippet.locator));
    evidence.appendChild(item);
  }
  main.appendChild(evidence);

  const rubric = el("section", { id: "rubric" });
  for (const key of RUBRIC_KEYS) {
    const row = el("div", { class: "rubric-row" });
    const button = el("button", {
      id: `rubric-${key}`,
      type: "button",
      "data-state": state.rubric[key],
    }, state.rubric[key]);
    button.onclick = () => handlers.onToggleRubric(key);
    row.appendChild(button);
    row.appendChild(el("label", {}, `${key.toUpperCase()} ${RUBRIC_LABELS[key]}`));
    rubric.appendChild(row);
  }
  main.appendChild(rubric);

  const actions = el("div", { id: "actions" });
  const accept = el("button", { id: "accept-btn", type: "button" }, "accept (a)");
  accept.disabled = !canAccept(state.rubric) || state.status === "submitting";
  accept.onclick = handlers.onAccept;
  actions.appendChild(accept);
  const reject = el("button", { id: "reject-btn", type: "button" }, "reject (r)");
  reject.disabled = state.status === "submitting";
  reject.onclick = handlers.onReject;
  actions.appendChild(reject);
  const edit = el("button", { id: "edit-btn", type: "button" },
    state.editOpen ? "close editor (e)" : "edit (e)");
  edit.onclick = handlers.onToggleEdit;
  actions.appendChild(edit);
  main.appendChild(actions);

  main.appendChild(el("div", { id: "hint", class: "hint" }, state.hint));

  if (state.editOpen) {
    const editor = el("section", { id: "editor" });
    editor.appendChild(el("p", { class: "ephemeral-note" },
      "Unsaved edits live only in this tab and are lost on refresh; " +
      "submitting creates a new version on the server."));
    const questionArea = el("textarea", { id: "edit-question", rows: "6" });
    questionArea.value = state.editQuestion;
    questionArea.oninput = () => handlers.onEditInput("question", questionArea.value);
    editor.appendChild(questionArea);
    const answerArea = el("textarea", { id: "edit-answer", rows: "10" });
    answerArea.value = state.editAnswer;
    answerArea.oninput = () => handlers.onEditInput("answer", answerArea.value);
    editor.appendChild(answerArea);
    const submit = el("button", { id: "submit-edit-btn", type: "button" }, "submit edit");
    submit.onclick = handlers.onSubmitEdit;
    editor.appendChild(submit);
    main.appendChild(editor);
  }

  return main;
}

function renderConflict(state: ReviewViewState, handlers: ViewHandlers): HTMLElement {
  const conflict = state.conflict!;
  const section = el("section", { id: "conflict-view" });
  section.appendChild(el("h3", {}, "Version conflict"));
  section.appendChild(el("p", {},
    `The sample moved to version ${conflict.latest.version} while you were ` +
    "reviewing. Nothing was lost: the committed decision is on the server, " +
    "and your buffers are below."));

  const renderDiff = (id: string, title: string, mine: string, theirs: string) => {
    const holder = el("div", { id });
    holder.appendChild(el("h4", {}, title));
    for (const row of diffLines(mine, theirs)) {
      const line = el("div", { class: `diff-${row.kind}` });
      const marker = row.kind === "added" ? "+ " : row.kind === "removed" ? "- " : "  ";
      line.textContent = marker + row.text;
      holder.appendChild(line);
    }
    section.appendChild(holder);
  };
  renderDiff("diff-question", "Question (yours vs latest)",
    conflict.bufferedQuestion, conflict.latest.question ?? "");
  renderDiff("diff-answer", "Answer (yours vs latest)",
    conflict.bufferedAnswer, conflict.latest.answer ?? "");

  const retry = el("button", { id: "retry-latest-btn", type: "button" },
    "keep my buffers, rebase on latest version");
  retry.onclick = handlers.onRetryWithLatest;
  section.appendChild(retry);
  const take = el("button", { id: "take-latest-btn", type: "button" },
    "discard my buffers, load latest");
  take.onclick = handlers.onTakeLatest;
  section.appendChild(take);
  return section;
}
