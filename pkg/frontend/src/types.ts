/** Wire types for the helploop HTTP API. */

export type HintType = "planning" | "debugging" | "optimization";

export type Rating = "helpful" | "unhelpful";

export const HINT_TYPES: HintType[] = ["planning", "debugging", "optimization"];

export interface RequestView {
  request_id: string;
  assignment_id: string;
  question_id: string;
  hint_type: HintType;
  student_comment: string | null;
  code_snapshot: string;
  created_at: string;
  status: string;
}

export interface HintView {
  hint_id: string;
  text: string;
  generated_at: string;
  generation_latency_seconds: number;
  rating: Rating | null;
}

export interface EscalationView {
  escalation_id: string;
  status: string;
  student_note: string | null;
  created_at: string;
}

export interface FeedbackView {
  text: string;
  created_at: string;
  instructor_id?: string;
}

export interface ThreadView {
  request: RequestView;
  hint: HintView | null;
  escalation: EscalationView | null;
  feedback: FeedbackView | null;
}

export interface StudentHintsResponse {
  question_id: string;
  remaining_quota: Record<HintType, number>;
  threads: ThreadView[];
}

export interface CreateRequestResponse {
  request: RequestView;
  notice: string;
}

export interface RequestStatusResponse {
  request_id: string;
  status: string;
  notice?: string;
  hint?: HintView;
}

export interface EscalateResponse {
  escalation: { escalation_id: string; status: string; created_at: string };
  notice: string;
}

export interface CaseContext {
  escalation: {
    escalation_id: string;
    anonymous_token: string;
    student_note: string | null;
    created_at: string;
    status: string;
    viewed_at: string | null;
    claim_expires_at: string | null;
  };
  task_description: string | null;
  code_snapshot: string;
  student_comment: string | null;
  ai_hint_text: string;
  student_note: string | null;
  assignment_id: string;
  question_id: string;
  hint_type: HintType;
  hint_generated_at: string;
}

export interface NextCaseResponse {
  context: CaseContext;
  queue_depth: number;
}

export interface MetaResponse {
  quota_limits: Record<HintType, number>;
  copy: Record<string, string>;
  attribution: boolean;
}
