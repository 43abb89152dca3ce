// Secondary acceptance: the accept control stays disabled until all four
// rubric toggles are true, and a keyboard-only path produces a decision the
// server actually accepts.

import { beforeEach, describe, expect, it } from "vitest";

import { CurationClient } from "../src/api.js";
import { ReviewApp } from "../src/app.js";
import { attachKeyboard } from "../src/keyboard.js";
import { buildDecision, canAccept, freshRubric, initialState, type Tri } from "../src/state.js";
import { FakeCurationServer, makeSample } from "./fakeServer.js";

function mount(server: FakeCurationServer, reviewer = "alice") {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app")!;
  const client = new CurationClient("", server.fetch);
  const app = new ReviewApp(client, root, reviewer);
  const detach = attachKeyboard(app, document);
  return { app, root, detach };
}

function press(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

function acceptButton(): HTMLButtonElement {
  return document.getElementById("accept-btn") as HTMLButtonElement;
}

async function settle(): Promise<void> {
  // let chained promises (submit -> loadNext) drain fully
  for (let i = 0; i < 3; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

describe("rubric gate parity", () => {
  let server: FakeCurationServer;

  beforeEach(() => {
    server = new FakeCurationServer([makeSample("paper-a.e000.q0")]);
  });

  it("keeps accept disabled until all four toggles are yes", async () => {
    const { app } = mount(server);
    await app.loadNext();
    expect(acceptButton().disabled).toBe(true);
    const keys = ["q1", "q2", "q3", "q4"] as const;
    for (const [index, key] of keys.entries()) {
      (document.getElementById(`rubric-${key}`) as HTMLButtonElement).click();
      const expected = index === keys.length - 1;
      expect(acceptButton().disabled).toBe(!expected);
    }
    expect(acceptButton().disabled).toBe(false);
  });

  it("re-disables accept when any toggle flips back to no", async () => {
    const { app } = mount(server);
    await app.loadNext();
    for (const key of ["1", "2", "3", "4"]) press(key);
    expect(acceptButton().disabled).toBe(false);
    press("3"); // yes -> no
    expect(acceptButton().disabled).toBe(true);
  });

  it("keyboard-only accept path produces a server-accepted decision", async () => {
    const { app } = mount(server);
    await app.loadNext();
    for (const key of ["1", "2", "3", "4"]) press(key);
    press("a");
    await settle();
    expect(server.samples.get("paper-a.e000.q0")!.stage).toBe("accepted");
    expect(server.decisions).toHaveLength(1);
    expect(server.decisions[0].action).toBe("accept");
    expect(server.rubricViolations()).toHaveLength(0);
    // queue is drained afterwards
    expect(document.getElementById("queue-empty")).not.toBeNull();
    expect(app.state.reviewedCount).toBe(1);
  });

  it("accept key with an incomplete rubric is a no-op with a hint", async () => {
    const { app } = mount(server);
    await app.loadNext();
    press("1");
    press("2");
    press("a");
    await settle();
    expect(server.decisions).toHaveLength(0);
    expect(server.rubricViolations()).toHaveLength(0);
    expect(document.getElementById("hint")!.textContent).toContain("all four");
    expect(app.state.sample!.stage).toBe("review_pending");
  });

  it("keyboard path and mouse path produce identical decisions", async () => {
    const { app } = mount(server);
    await app.loadNext();
    for (const key of ["1", "2", "3", "4"]) press(key);
    press("a");
    await settle();
    const viaKeyboard = server.decisions[0];

    const second = new FakeCurationServer([makeSample("paper-a.e000.q0")]);
    const mounted = mount(second, "alice");
    await mounted.app.loadNext();
    for (const q of ["q1", "q2", "q3", "q4"]) {
      (document.getElementById(`rubric-${q}`) as HTMLButtonElement).click();
    }
    acceptButton().click();
    await settle();
    const viaMouse = second.decisions[0];
    expect(viaMouse).toEqual({ ...viaKeyboard, decision_id: viaMouse.decision_id });
  });

  it("never emits a payload the server would classify RubricViolation", async () => {
    // fuzz the client gate directly: for every rubric combination, either
    // buildDecision throws (control disabled) or the server accepts it
    const states: Tri[] = ["unset", "yes", "no"];
    for (const q1 of states) {
      for (const q2 of states) {
        for (const q3 of states) {
          for (const q4 of states) {
            const state = initialState("fuzzer");
            state.sample = makeSample("s");
            state.baseVersion = 1;
            state.rubric = { ...freshRubric(), q1, q2, q3, q4 };
            const gateOpen = canAccept(state.rubric);
            if (!gateOpen) {
              expect(() => buildDecision(state, "accept")).toThrow();
            } else {
              const decision = buildDecision(state, "accept");
              expect(
                decision.q1_reasoning_type &&
                  decision.q2_clarity &&
                  decision.q3_correctness &&
                  decision.q4_density,
              ).toBe(true);
            }
          }
        }
      }
    }
  });

  it("shows the keymap overlay on demand", async () => {
    const { app } = mount(server);
    await app.loadNext();
    expect(document.getElementById("overlay")).toBeNull();
    press("?");
    expect(document.getElementById("overlay")).not.toBeNull();
    expect(document.getElementById("overlay")!.textContent).toContain("accept");
    press("?");
    expect(document.getElementById("overlay")).toBeNull();
  });

  it("ignores review keys while typing in the editor", async () => {
    const { app } = mount(server);
    await app.loadNext();
    press("e");
    const area = document.getElementById("edit-answer") as HTMLTextAreaElement;
    area.dispatchEvent(new KeyboardEvent("keydown", { key: "a", bubbles: true }));
    await settle();
    expect(server.decisions).toHaveLength(0);
  });
});
