// Review view state and the client-side rubric gate.
//
// The gate invariant: buildDecision("accept") refuses to construct a payload
// unless all four rubric toggles are explicitly "yes", so the UI can never
// send the server a decision it would classify RubricViolation.

import type { DecisionRequest, SampleView, TranscriptMeta } from "./api.js";

export type Tri = "unset" | "yes" | "no";

export const RUBRIC_KEYS = ["q1", "q2", "q3", "q4"] as const;
export type RubricKey = (typeof RUBRIC_KEYS)[number];

export const RUBRIC_LABELS: Record<RubricKey, string> = {
  q1: "Reasoning type: demands creative insight and complex reasoning",
  q2: "Clarity: clear, well-defined, solvable with the given information",
  q3: "Correctness: every derivation step logically valid and complete",
  q4: "Density: enough logical steps and heuristic reasoning cues",
};

export type RubricState = Record<RubricKey, Tri>;

export type ViewStatus =
  | "idle"
  | "loading"
  | "submitting"
  | "queue-empty"
  | "unreachable"
  | "conflict";

export interface ConflictInfo {
  latest: SampleView;
  bufferedQuestion: string;
  bufferedAnswer: string;
}

export interface ReviewViewState {
  reviewerId: string;
  sample: SampleView | null;
  transcriptMeta: TranscriptMeta[];
  rubric: RubricState;
  editOpen: boolean;
  editQuestion: string;
  editAnswer: string;
  baseVersion: number;
  reviewedCount: number;
  status: ViewStatus;
  hint: string;
  conflict: ConflictInfo | null;
}

export function freshRubric(): RubricState {
  return { q1: "unset", q2: "unset", q3: "unset", q4: "unset" };
}

export function initialState(reviewerId: string): ReviewViewState {
  return {
    reviewerId,
    sample: null,
    transcriptMeta: [],
    rubric: freshRubric(),
    editOpen: false,
    editQuestion: "",
    editAnswer: "",
    baseVersion: 0,
    reviewedCount: 0,
    status: "idle",
    hint: "",
    conflict: null,
  };
}

/** Edit buffers always initialize from the served version. */
export function loadSample(
  state: ReviewViewState,
  sample: SampleView,
  transcriptMeta: TranscriptMeta[] = [],
): void {
  state.sample = sample;
  state.transcriptMeta = transcriptMeta;
  state.rubric = freshRubric();
  state.editOpen = false;
  state.editQuestion = sample.question ?? "";
  state.editAnswer = sample.answer ?? "";
  state.baseVersion = sample.version;
  state.status = "idle";
  state.hint = "";
  state.conflict = null;
}

export function cycleTri(value: Tri): Tri {
  if (value === "unset") return "yes";
  if (value === "yes") return "no";
  return "yes";
}

export function toggleRubric(state: ReviewViewState, key: RubricKey): void {
  state.rubric[key] = cycleTri(state.rubric[key]);
}

export function setRubric(state: ReviewViewState, key: RubricKey, value: Tri): void {
  state.rubric[key] = value;
}

export function canAccept(rubric: RubricState): boolean {
  return RUBRIC_KEYS.every((key) => rubric[key] === "yes");
}

export function rubricComplete(rubric: RubricState): boolean {
  return RUBRIC_KEYS.every((key) => rubric[key] !== "unset");
}

function rubricBooleans(rubric: RubricState): {
  q1_reasoning_type: boolean;
  q2_clarity: boolean;
  q3_correctness: boolean;
  q4_density: boolean;
} {
  return {
    q1_reasoning_type: rubric.q1 === "yes",
    q2_clarity: rubric.q2 === "yes",
    q3_correctness: rubric.q3 === "yes",
    q4_density: rubric.q4 === "yes",
  };
}

export class GateViolation extends Error {}

/**
 * Construct the decision payload. For "accept" this throws unless the gate
 * is satisfied; callers treat that as "control disabled", so a payload the
 * server would 422 can never leave the client.
 */
export function buildDecision(
  state: ReviewViewState,
  action: "accept" | "reject" | "edit",
  options: { difficultyRank?: number | null; note?: string } = {},
): DecisionRequest {
  if (!state.sample) throw new GateViolation("no sample loaded");
  if (action === "accept" && !canAccept(state.rubric)) {
    throw new GateViolation("accept requires all four rubric answers to be yes");
  }
  const decision: DecisionRequest = {
    reviewer_id: state.reviewerId,
    ...rubricBooleans(state.rubric),
    action,
    base_version: state.baseVersion,
    note: options.note ?? "",
    difficulty_rank: options.difficultyRank ?? null,
  };
  if (action === "edit") {
    const editedQuestion = state.editQuestion !== (state.sample.question ?? "");
    const editedAnswer = state.editAnswer !== (state.sample.answer ?? "");
    if (!editedQuestion && !editedAnswer) {
      throw new GateViolation("edit requires a changed question or answer");
    }
    if (editedQuestion) decision.edited_question = state.editQuestion;
    if (editedAnswer) decision.edited_answer = state.editAnswer;
  }
  return decision;
}
