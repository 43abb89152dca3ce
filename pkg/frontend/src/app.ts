// Controller: owns the state, talks to the curation client, re-renders.
// All mutation goes through methods so tests can drive the app exactly the
// way the DOM handlers and keyboard bindings do.

import {
  ApiError,
  CurationClient,
  UnreachableError,
  type SampleView,
} from "./api.js";
import {
  GateViolation,
  type ReviewViewState,
  type RubricKey,
  buildDecision,
  canAccept,
  initialState,
  loadSample,
  toggleRubric,
} from "./state.js";
import { render, type ViewHandlers } from "./view.js";

export class ReviewApp {
  readonly state: ReviewViewState;
  private overlayVisible = false;
  private readonly handlers: ViewHandlers;

  constructor(
    private readonly client: CurationClient,
    private readonly root: HTMLElement,
    reviewerId: string,
  ) {
    this.state = initialState(reviewerId);
    this.handlers = {
      onToggleRubric: (key) => this.toggleRubric(key),
      onAccept: () => void this.accept(),
      onReject: () => void this.reject(),
      onToggleEdit: () => this.toggleEdit(),
      onEditInput: (field, value) => this.editInput(field, value),
      onSubmitEdit: () => void this.submitEdit(),
      onLoadNext: () => void this.loadNext(),
      onRetryWithLatest: () => this.retryWithLatest(),
      onTakeLatest: () => this.takeLatest(),
      onToggleOverlay: () => this.toggleOverlay(),
    };
    this.render();
  }

  render(): void {
    render(this.root, this.state, this.handlers, this.overlayVisible);
  }

  async loadNext(): Promise<void> {
    this.state.status = "loading";
    this.state.hint = "";
    this.render();
    try {
      const next = await this.client.nextForReview(this.state.reviewerId);
      loadSample(this.state, next.sample, next.transcript_meta);
    } catch (error) {
      if (error instanceof ApiError && error.code === "QueueEmpty") {
        this.state.sample = null;
        this.state.status = "queue-empty";
      } else if (error instanceof UnreachableError) {
        // keep current sample and buffers: a flaky service must not eat work
        this.state.status = "unreachable";
      } else {
        throw error;
      }
    }
    this.render();
  }

  toggleRubric(key: RubricKey): void {
    toggleRubric(this.state, key);
    this.state.hint = "";
    this.render();
  }

  toggleEdit(): void {
    this.state.editOpen = !this.state.editOpen;
    this.render();
  }

  editInput(field: "question" | "answer", value: string): void {
    if (field === "question") this.state.editQuestion = value;
    else this.state.editAnswer = value;
  }

  toggleOverlay(): void {
    this.overlayVisible = !this.overlayVisible;
    this.render();
  }

  /** Keyboard or click accept: a no-op with a hint while the gate is shut. */
  async accept(): Promise<void> {
    if (!this.state.sample) return;
    if (!canAccept(this.state.rubric)) {
      this.state.hint =
        "accept needs all four rubric answers set to yes (keys 1-4)";
      this.render();
      return;
    }
    await this.submit("accept");
  }

  async reject(): Promise<void> {
    if (!this.state.sample) return;
    await this.submit("reject");
  }

  async submitEdit(): Promise<void> {
    if (!this.state.sample) return;
    await this.submit("edit");
  }

  private async submit(action: "accept" | "reject" | "edit"): Promise<void> {
    let decision;
    try {
      decision = buildDecision(this.state, action);
    } catch (error) {
      if (error instanceof GateViolation) {
        this.state.hint = error.message;
        this.render();
        return;
      }
      throw error;
    }
    this.state.status = "submitting";
    this.render();
    try {
      await this.client.submitDecision(this.state.sample!.sample_id, decision);
    } catch (error) {
      if (error instanceof ApiError && error.code === "VersionConflict") {
        await this.enterConflict();
        return;
      }
      if (error instanceof ApiError) {
        // RubricViolation can only mean a client/server gate mismatch;
        // surface it inline rather than crashing the review session
        this.state.status = "idle";
        this.state.hint = `${error.code}: ${error.message}`;
        this.render();
        return;
      }
      if (error instanceof UnreachableError) {
        this.state.status = "unreachable";
        this.render();
        return;
      }
      throw error;
    }
    this.state.reviewedCount += 1;
    await this.loadNext();
  }

  private async enterConflict(): Promise<void> {
    const latest = await this.client.getSample(this.state.sample!.sample_id);
    this.state.conflict = {
      latest,
      bufferedQuestion: this.state.editQuestion,
      bufferedAnswer: this.state.editAnswer,
    };
    this.state.status = "conflict";
    this.render();
  }

  /** Keep the reviewer's buffers but rebase the decision on the new version. */
  retryWithLatest(): void {
    const conflict = this.state.conflict;
    if (!conflict) return;
    const buffersQuestion = conflict.bufferedQuestion;
    const buffersAnswer = conflict.bufferedAnswer;
    loadSample(this.state, conflict.latest, this.state.transcriptMeta);
    this.state.editQuestion = buffersQuestion;
    this.state.editAnswer = buffersAnswer;
    this.state.editOpen = true;
    this.render();
  }

  takeLatest(): void {
    const conflict = this.state.conflict;
    if (!conflict) return;
    loadSample(this.state, conflict.latest, this.state.transcriptMeta);
    this.render();
  }

  currentSample(): SampleView | null {
    return this.state.sample;
  }
}
