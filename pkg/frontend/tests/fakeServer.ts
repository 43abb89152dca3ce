// In-memory double of the curation HTTP API, faithful to the wire contract
// the service tests pin on the backend: same routes, same status codes,
// same {code, message} error bodies, same rubric/version rules. Tests run
// the real client and app against this fetch.

import type { DecisionRequest, SampleView } from "../src/api.js";

interface StoredSample extends SampleView {
  leasedBy?: string;
}

export interface RecordedDecision extends DecisionRequest {
  sample_id: string;
  decision_id: string;
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function makeSample(id: string, overrides: Partial<SampleView> = {}): SampleView {
  return {
    sample_id: id,
    paper_id: "paper-a",
    expression: {
      expr_id: "e000",
      kind: "formula",
      latex: "\\pi_r(y|x)=\\frac{1}{Z(x)}\\pi_{ref}(y|x)\\exp(\\frac{1}{\\beta}r(x,y))",
      number_label: "(2)",
      file: "body",
      start: 0,
      end: 10,
    },
    query: "How can we derive the formula: $$\\pi_r = 1$$?",
    whole_label: "From the objective we obtain $$\\pi_r = 1$$.",
    evidence: [{ text: "where $\\beta$ is the penalty coefficient", locator: "sec 2" }],
    question: "Based on Formula (2): $$\\pi_r = 1$$, how is it derived?",
    answer: "Normalizing gives $$\\pi_r = 1$$, where $Z$ is the normalizer.",
    stage: "review_pending",
    version: 1,
    flags: [],
    transcripts: [],
    failure_report: null,
    ...overrides,
  };
}

export class FakeCurationServer {
  readonly samples = new Map<string, StoredSample>();
  readonly decisions: RecordedDecision[] = [];
  /** accept requests the server refused with RubricViolation (never logged as decisions) */
  readonly refusedAccepts: DecisionRequest[] = [];
  requestCount = 0;
  unreachable = false;

  constructor(samples: SampleView[] = []) {
    for (const sample of samples) this.samples.set(sample.sample_id, { ...sample });
  }

  expireLeases(): void {
    for (const sample of this.samples.values()) delete sample.leasedBy;
  }

  rubricViolations(): DecisionRequest[] {
    return [...this.refusedAccepts];
  }

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    this.requestCount += 1;
    if (this.unreachable) throw new TypeError("failed to fetch");
    const url = new URL(input, "http://fake.test");
    const path = url.pathname;

    if (path === "/queue/next") {
      const reviewer = url.searchParams.get("reviewer") ?? "";
      const pending = [...this.samples.values()]
        .filter((s) => s.stage === "review_pending")
        .filter((s) => !s.leasedBy || s.leasedBy === reviewer)
        .sort((a, b) => a.sample_id.localeCompare(b.sample_id));
      if (!pending.length) {
        return jsonResponse(404, { code: "QueueEmpty", message: "no samples pending review" });
      }
      pending[0].leasedBy = reviewer;
      return jsonResponse(200, { sample: this.view(pending[0]), transcript_meta: [] });
    }

    const sampleMatch = path.match(/^\/samples\/([^/]+)$/);
    if (sampleMatch && (!init?.method || init.method === "GET")) {
      const sample = this.samples.get(decodeURIComponent(sampleMatch[1]));
      if (!sample) return jsonResponse(404, { code: "UnknownSample", message: "unknown sample" });
      return jsonResponse(200, this.view(sample));
    }

    const decisionMatch = path.match(/^\/samples\/([^/]+)\/decision$/);
    if (decisionMatch && init?.method === "POST") {
      return this.handleDecision(
        decodeURIComponent(decisionMatch[1]),
        JSON.parse(String(init.body)) as DecisionRequest,
      );
    }

    return jsonResponse(404, { code: "UnknownRoute", message: path });
  };

  private view(sample: StoredSample): SampleView {
    const { leasedBy: _lease, ...view } = sample;
    return JSON.parse(JSON.stringify(view)) as SampleView;
  }

  private handleDecision(sampleId: string, decision: DecisionRequest): Response {
    const sample = this.samples.get(sampleId);
    if (!sample) {
      return jsonResponse(404, { code: "UnknownSample", message: "unknown sample" });
    }
    if (sample.stage !== "review_pending") {
      return jsonResponse(422, {
        code: "InvalidDecision",
        message: `sample is ${sample.stage}, not review_pending`,
      });
    }
    if (decision.base_version !== sample.version) {
      return jsonResponse(409, {
        code: "VersionConflict",
        message: `base_version ${decision.base_version} != current ${sample.version}`,
      });
    }
    if (decision.action === "accept") {
      const allTrue =
        decision.q1_reasoning_type &&
        decision.q2_clarity &&
        decision.q3_correctness &&
        decision.q4_density;
      if (!allTrue) {
        this.refusedAccepts.push(decision);
        return jsonResponse(422, {
          code: "RubricViolation",
          message: "accept requires all four rubric answers true",
        });
      }
      sample.stage = "accepted";
    } else if (decision.action === "reject") {
      sample.stage = "rejected";
    } else if (decision.action === "edit") {
      if (decision.edited_question == null && decision.edited_answer == null) {
        return jsonResponse(422, {
          code: "InvalidDecision",
          message: "edit requires edited content",
        });
      }
      if (decision.edited_question != null) sample.question = decision.edited_question;
      if (decision.edited_answer != null) sample.answer = decision.edited_answer;
      sample.version += 1;
      sample.stage = "review_pending";
      delete sample.leasedBy;
    } else {
      return jsonResponse(422, { code: "InvalidDecision", message: "unknown action" });
    }
    this.decisions.push(this.record(sampleId, decision));
    delete sample.leasedBy;
    return jsonResponse(200, {
      sample_id: sampleId,
      new_version: sample.version,
      stage: sample.stage,
    });
  }

  private record(sampleId: string, decision: DecisionRequest): RecordedDecision {
    return {
      ...decision,
      sample_id: sampleId,
      decision_id: `d${this.decisions.length + 1}`,
    };
  }
}
