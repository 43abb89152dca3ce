// Typed client for the curation HTTP API. The UI talks to the server and to
// nothing else; every rule is enforced server-side and merely mirrored here.

export interface ExpressionView {
  expr_id: string;
  kind: string;
  latex: string;
  number_label: string | null;
  file: string;
  start: number;
  end: number;
}

export interface SnippetView {
  text: string;
  locator: string;
}

export interface SampleView {
  sample_id: string;
  paper_id: string;
  expression: ExpressionView;
  query: string | null;
  whole_label: string | null;
  evidence: SnippetView[] | null;
  question: string | null;
  answer: string | null;
  stage: string;
  version: number;
  flags: string[];
  transcripts: string[];
  failure_report: Record<string, unknown> | null;
}

export interface TranscriptMeta {
  transcript_id: string;
  agent_role: string;
  attempt: number;
  outcome: string;
  provider_name: string;
}

export interface NextForReviewResponse {
  sample: SampleView;
  transcript_meta: TranscriptMeta[];
}

export type DecisionAction = "accept" | "reject" | "edit";

export interface DecisionRequest {
  reviewer_id: string;
  q1_reasoning_type: boolean;
  q2_clarity: boolean;
  q3_correctness: boolean;
  q4_density: boolean;
  action: DecisionAction;
  base_version: number;
  edited_question?: string | null;
  edited_answer?: string | null;
  note?: string;
  difficulty_rank?: number | null;
}

export interface DecisionResponse {
  sample_id: string;
  new_version: number;
  stage: string;
}

/** Server-reported domain error: carries the {code, message} body. */
export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Transport-level failure: service unreachable, timeouts, bad gateway. */
export class UnreachableError extends Error {
  constructor(cause: unknown) {
    super(`curation service unreachable: ${String(cause)}`);
    this.name = "UnreachableError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class CurationClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new UnreachableError(cause);
    }
    if (response.status >= 500) {
      throw new UnreachableError(`HTTP ${response.status}`);
    }
    const body = await response.json();
    if (!response.ok) {
      const code = typeof body?.code === "string" ? body.code : "UnknownError";
      const message = typeof body?.message === "string" ? body.message : "";
      throw new ApiError(code, message, response.status);
    }
    return body as T;
  }

  nextForReview(reviewerId: string, paperId?: string): Promise<NextForReviewResponse> {
    const params = new URLSearchParams({ reviewer: reviewerId });
    if (paperId) params.set("paper_id", paperId);
    return this.request(`/queue/next?${params.toString()}`);
  }

  getSample(sampleId: string): Promise<SampleView> {
    return this.request(`/samples/${encodeURIComponent(sampleId)}`);
  }

  submitDecision(sampleId: string, decision: DecisionRequest): Promise<DecisionResponse> {
    return this.request(`/samples/${encodeURIComponent(sampleId)}/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    });
  }

  audit(sampleId: string): Promise<{ sample_id: string; events: unknown[] }> {
    return this.request(`/samples/${encodeURIComponent(sampleId)}/audit`);
  }
}
