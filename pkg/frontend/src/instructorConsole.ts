import { ApiError, HelpLoopClient } from "./api";
import { badge, escapeHtml, shortInstant } from "./render";
import type { NextCaseResponse } from "./types";

/**
 * Instructor work queue: claim the oldest unresolved case, write feedback,
 * and advance. The server owns ordering and the claim lease; this class only
 * reflects what it was served. Cases identify students by anonymous token —
 * there is nothing else to show.
 */
export class InstructorConsole {
  private current: NextCaseResponse | null = null;
  private error: string | null = null;
  private resolvedCount = 0;

  constructor(private readonly client: HelpLoopClient) {}

  get currentCase(): NextCaseResponse | null {
    return this.current;
  }

  get resolved(): number {
    return this.resolvedCount;
  }

  /** Claim (or re-claim) the oldest unresolved escalation. */
  async claimNext(): Promise<void> {
    this.error = null;
    try {
      this.current = await this.client.nextCase();
    } catch (error) {
      this.error = describe(error);
    }
  }

  /** Submit feedback for the claimed case, then auto-advance to the next. */
  async respond(text: string): Promise<void> {
    if (this.current === null) {
      return;
    }
    if (!text.trim()) {
      this.error = "Feedback text must not be empty.";
      return;
    }
    this.error = null;
    try {
      await this.client.submitFeedback(
        this.current.context.escalation.escalation_id,
        text,
      );
      this.resolvedCount += 1;
      await this.claimNext();
    } catch (error) {
      this.error = describe(error);
    }
  }

  /** Hand the claimed case back to the queue for someone else. */
  async release(): Promise<void> {
    if (this.current === null) {
      return;
    }
    this.error = null;
    try {
      await this.client.releaseCase(this.current.context.escalation.escalation_id);
      this.current = null;
    } catch (error) {
      this.error = describe(error);
    }
  }

  render(): string {
    const parts = [
      this.error ? `<p class="error">${escapeHtml(this.error)}</p>` : "",
      `<p class="muted">Resolved this session: ${this.resolvedCount}</p>`,
    ];
    if (this.current === null) {
      parts.push(
        `<p class="empty">No unresolved escalations. ` +
          `<button data-action="claim">Check again</button></p>`,
      );
      return parts.filter(Boolean).join("\n");
    }
    const { context, queue_depth } = this.current;
    const escalation = context.escalation;
    parts.push(
      `<article class="case" data-escalation-id="${escalation.escalation_id}">`,
      `<header>${badge(context.hint_type, "type")} ` +
        `${badge(escalation.anonymous_token, "anon")} ` +
        `<time>escalated ${shortInstant(escalation.created_at)}</time> ` +
        `<span class="muted">${queue_depth} waiting</span></header>`,
      context.task_description
        ? `<section><h3>Task</h3><p>${escapeHtml(context.task_description)}</p></section>`
        : "",
      `<section><h3>Student code</h3><pre>${escapeHtml(context.code_snapshot)}</pre></section>`,
      context.student_comment
        ? `<section><h3>Student comment</h3><p>${escapeHtml(context.student_comment)}</p></section>`
        : "",
      `<section><h3>Rejected hint</h3><p>${escapeHtml(context.ai_hint_text)}</p></section>`,
      context.student_note
        ? `<section><h3>Why it didn't help</h3><p>${escapeHtml(context.student_note)}</p></section>`
        : "",
      `<section class="respond">`,
      `<textarea id="feedback-text" rows="4" placeholder="Write feedback for the student"></textarea>`,
      `<button data-action="respond">Send feedback</button>`,
      `<button data-action="release">Release case</button>`,
      `</section>`,
      `</article>`,
    );
    return parts.filter(Boolean).join("\n");
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.message} (${error.code})`;
  }
  return error instanceof Error ? error.message : String(error);
}
