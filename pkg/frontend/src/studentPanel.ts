import { ApiError, HelpLoopClient } from "./api";
import { badge, escapeHtml, shortInstant } from "./render";
import type {
  HintType,
  MetaResponse,
  StudentHintsResponse,
  ThreadView,
} from "./types";
import { HINT_TYPES } from "./types";

/**
 * Student view of one question: remaining quota, every hint thread so far,
 * and the actions the thread's state allows (rate, escalate, read feedback).
 *
 * All state lives on the server; `refresh()` re-reads it, so a page reload
 * (a fresh panel instance) renders exactly the same controls.
 */
export class StudentPanel {
  private meta: MetaResponse | null = null;
  private hints: StudentHintsResponse | null = null;
  private notice: string | null = null;
  private error: string | null = null;

  constructor(
    private readonly client: HelpLoopClient,
    public assignmentId: string,
    public questionId: string,
  ) {}

  async refresh(): Promise<void> {
    if (this.meta === null) {
      this.meta = await this.client.meta();
    }
    this.hints = await this.client.studentHints(this.questionId);
  }

  setQuestion(assignmentId: string, questionId: string): void {
    this.assignmentId = assignmentId;
    this.questionId = questionId;
    this.hints = null;
    this.notice = null;
    this.error = null;
  }

  quotaRemaining(hintType: HintType): number {
    return this.hints?.remaining_quota[hintType] ?? 0;
  }

  /** A hint type is requestable only while its per-question quota has room. */
  canRequest(hintType: HintType): boolean {
    return this.quotaRemaining(hintType) > 0;
  }

  async requestHint(
    hintType: HintType,
    comment: string,
    code: string,
  ): Promise<void> {
    this.error = null;
    try {
      await this.client.giveConsent();
      const created = await this.client.createHintRequest({
        assignment_id: this.assignmentId,
        question_id: this.questionId,
        hint_type: hintType,
        student_comment: comment || undefined,
        code_snapshot: code,
      });
      this.notice = created.notice;
    } catch (error) {
      this.error = describe(error);
    }
    await this.refresh();
  }

  async rate(hintId: string, rating: "helpful" | "unhelpful"): Promise<void> {
    this.error = null;
    try {
      await this.client.rateHint(hintId, rating);
    } catch (error) {
      this.error = describe(error);
    }
    await this.refresh();
  }

  async escalate(hintId: string, note: string): Promise<void> {
    this.error = null;
    try {
      const escalated = await this.client.escalateHint(hintId, note || undefined);
      this.notice = escalated.notice;
    } catch (error) {
      this.error = describe(error);
    }
    await this.refresh();
  }

  render(): string {
    if (this.hints === null || this.meta === null) {
      return `<p class="muted">Loading question ${escapeHtml(this.questionId)}…</p>`;
    }
    const parts = [
      this.error ? `<p class="error">${escapeHtml(this.error)}</p>` : "",
      this.notice ? `<p class="notice">${escapeHtml(this.notice)}</p>` : "",
      this.renderRequestForm(),
      ...this.hints.threads.map((thread) => this.renderThread(thread)),
    ];
    if (this.hints.threads.length === 0) {
      parts.push(`<p class="muted">No hints requested for this question yet.</p>`);
    }
    return parts.filter(Boolean).join("\n");
  }

  private renderRequestForm(): string {
    const buttons = HINT_TYPES.map((hintType) => {
      const remaining = this.quotaRemaining(hintType);
      const limit = this.meta?.quota_limits[hintType] ?? 0;
      const description = this.meta?.copy[`${hintType}_description`] ?? hintType;
      const disabled = this.canRequest(hintType) ? "" : " disabled";
      return (
        `<button class="request" data-action="request" data-hint-type="${hintType}"` +
        ` title="${escapeHtml(description)}"${disabled}>` +
        `${hintType} (${remaining}/${limit} left)</button>`
      );
    }).join("\n");
    return [
      `<section class="request-form">`,
      `<label>What are you stuck on? <input id="student-comment" type="text"></label>`,
      `<label>Your current code <textarea id="student-code" rows="6"></textarea></label>`,
      buttons,
      `</section>`,
    ].join("\n");
  }

  private renderThread(thread: ThreadView): string {
    const lines = [
      `<article class="thread" data-request-id="${escapeHtml(thread.request.request_id)}">`,
      `<header>${badge(thread.request.hint_type, "type")} ` +
        `${badge(thread.request.status, "status")} ` +
        `<time>${shortInstant(thread.request.created_at)}</time></header>`,
    ];
    if (thread.hint === null) {
      const notice =
        this.meta?.copy["generation_notice"] ?? "Your hint is being generated.";
      lines.push(`<p class="pending">${escapeHtml(notice)}</p>`);
    } else {
      lines.push(`<p class="hint-text">${escapeHtml(thread.hint.text)}</p>`);
      lines.push(this.renderThreadActions(thread));
    }
    if (thread.feedback !== null) {
      const by = thread.feedback.instructor_id
        ? ` — ${escapeHtml(thread.feedback.instructor_id)}`
        : "";
      lines.push(
        `<blockquote class="feedback"><strong>Instructor feedback</strong>${by}: ` +
          `${escapeHtml(thread.feedback.text)}</blockquote>`,
      );
    } else if (thread.escalation !== null) {
      lines.push(
        `<p class="pending">Escalated ${shortInstant(thread.escalation.created_at)}; ` +
          `an instructor will respond.</p>`,
      );
    }
    lines.push(`</article>`);
    return lines.join("\n");
  }

  private renderThreadActions(thread: ThreadView): string {
    const hint = thread.hint;
    if (hint === null) {
      return "";
    }
    if (hint.rating === null) {
      return (
        `<p class="actions">Was this hint helpful? ` +
        `<button data-action="rate" data-hint-id="${hint.hint_id}" data-rating="helpful">Helpful</button> ` +
        `<button data-action="rate" data-hint-id="${hint.hint_id}" data-rating="unhelpful">Unhelpful</button></p>`
      );
    }
    if (hint.rating === "unhelpful" && thread.escalation === null) {
      return (
        `<p class="actions">${badge("unhelpful", "rating")} ` +
        `<button data-action="escalate" data-hint-id="${hint.hint_id}">Ask an instructor</button></p>`
      );
    }
    return `<p class="actions">${badge(hint.rating, "rating")}</p>`;
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.message} (${error.code})`;
  }
  return error instanceof Error ? error.message : String(error);
}
