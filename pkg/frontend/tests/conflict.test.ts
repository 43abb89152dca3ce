// Secondary acceptance: two reviewers editing the same sample. The second
// submission surfaces the version-conflict diff view and no decision is lost.

import { beforeEach, describe, expect, it } from "vitest";

import { CurationClient } from "../src/api.js";
import { ReviewApp } from "../src/app.js";
import { FakeCurationServer, makeSample } from "./fakeServer.js";

function mount(server: FakeCurationServer, reviewer: string) {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const client = new CurationClient("", server.fetch);
  return new ReviewApp(client, root, reviewer);
}

async function settle(): Promise<void> {
  for (let i = 0; i < 3; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

describe("version conflict handling", () => {
  let server: FakeCurationServer;
  let alice: ReviewApp;
  let bob: ReviewApp;

  beforeEach(async () => {
    document.body.innerHTML = "";
    server = new FakeCurationServer([makeSample("paper-a.e000.q0")]);
    alice = mount(server, "alice");
    bob = mount(server, "bob");
    await alice.loadNext();
    server.expireLeases(); // simulate bob picking up the same sample later
    await bob.loadNext();
    expect(alice.state.sample!.sample_id).toBe(bob.state.sample!.sample_id);
  });

  it("second edit sees the conflict view with a diff and loses nothing", async () => {
    alice.toggleEdit();
    alice.editInput("answer", "Alice's improved answer.\nSecond line.");
    await alice.submitEdit();
    await settle();
    expect(server.samples.get("paper-a.e000.q0")!.version).toBe(2);
    expect(server.decisions).toHaveLength(1);

    bob.toggleEdit();
    bob.editInput("answer", "Bob's different answer.");
    await bob.submitEdit();
    await settle();

    // bob lands in the conflict view, buffers intact
    expect(bob.state.status).toBe("conflict");
    expect(bob.state.conflict!.bufferedAnswer).toBe("Bob's different answer.");
    expect(bob.state.conflict!.latest.version).toBe(2);
    expect(document.querySelectorAll("#conflict-view")).toHaveLength(1);
    const diffAnswer = document.getElementById("diff-answer")!;
    expect(diffAnswer.textContent).toContain("- Bob's different answer.");
    expect(diffAnswer.textContent).toContain("+ Alice's improved answer.");

    // no decision lost: alice's edit is committed on the server
    expect(server.decisions).toHaveLength(1);
    expect(server.samples.get("paper-a.e000.q0")!.answer).toBe(
      "Alice's improved answer.\nSecond line.",
    );
  });

  it("rebase keeps bob's buffers and lets the edit commit as version 3", async () => {
    alice.toggleEdit();
    alice.editInput("answer", "Alice's improved answer.");
    await alice.submitEdit();
    await settle();

    bob.toggleEdit();
    bob.editInput("answer", "Bob's different answer.");
    await bob.submitEdit();
    await settle();
    expect(bob.state.status).toBe("conflict");

    bob.retryWithLatest();
    expect(bob.state.baseVersion).toBe(2);
    expect(bob.state.editAnswer).toBe("Bob's different answer.");
    await bob.submitEdit();
    await settle();

    const sample = server.samples.get("paper-a.e000.q0")!;
    expect(sample.version).toBe(3);
    expect(sample.answer).toBe("Bob's different answer.");
    // both decisions recorded: nothing lost on either side
    expect(server.decisions).toHaveLength(2);
    expect(server.decisions.map((d) => d.reviewer_id)).toEqual(["alice", "bob"]);
  });

  it("take-latest discards buffers and reloads the served version", async () => {
    alice.toggleEdit();
    alice.editInput("question", "Alice's question?");
    await alice.submitEdit();
    await settle();

    bob.toggleEdit();
    bob.editInput("question", "Bob's question?");
    await bob.submitEdit();
    await settle();
    expect(bob.state.status).toBe("conflict");

    bob.takeLatest();
    expect(bob.state.status).toBe("idle");
    expect(bob.state.baseVersion).toBe(2);
    expect(bob.state.editQuestion).toBe("Alice's question?");
  });

  it("stale accept also routes through the conflict view", async () => {
    alice.toggleEdit();
    alice.editInput("answer", "Alice's improved answer.");
    await alice.submitEdit();
    await settle();

    for (const key of ["q1", "q2", "q3", "q4"] as const) {
      bob.toggleRubric(key);
    }
    await bob.accept();
    await settle();
    expect(bob.state.status).toBe("conflict");
    // the sample is still pending: the stale accept did not land
    expect(server.samples.get("paper-a.e000.q0")!.stage).toBe("review_pending");
  });
});
