import { ApiError, ChoiceToken, DoneItem, StudyApi, TripletItem } from "./api";
import { Now } from "./flicker";
import { ImageLoader, Presentation } from "./presentation";
import { SubmissionQueue } from "./queue";

// The participant session state machine. Server state is authoritative:
// every transition is driven by what /next or /current returns, so a page
// reload resumes wherever the server cursor stands.
//
//   consent -> screening -> item (training/testing) -> break -> ... -> done

export type SessionState =
  | { kind: "consent" }
  | { kind: "screening" }
  | { kind: "rejected"; reason: string } // failed screening gates
  | { kind: "item"; presentation: Presentation }
  | { kind: "break"; minDurationS: number; startedAt: number }
  | { kind: "done"; completionCode: string }
  | { kind: "aborted"; reason: string };

export class SessionController {
  state: SessionState = { kind: "consent" };
  private queue: SubmissionQueue;
  private submitting = false;

  constructor(
    private readonly api: StudyApi,
    private readonly loader: ImageLoader,
    private readonly now: Now = () => performance.now(),
  ) {
    this.queue = new SubmissionQueue((s) => api.submit(s.tripletId, s.choice, s.latencyMs));
  }

  consentGiven(): void {
    if (this.state.kind !== "consent") return;
    this.state = { kind: "screening" };
  }

  async submitScreening(acuityOk: boolean, colorVisionOk: boolean): Promise<void> {
    const answers = { consent: true, acuity_ok: acuityOk, color_vision_ok: colorVisionOk };
    const result = await this.api.register(answers);
    if (result.phase === "screening") {
      this.state = { kind: "rejected", reason: "screening requirements not met" };
      return;
    }
    await this.advance();
  }

  // Resume after a reload: ask the server where this observer stands.
  async resume(): Promise<void> {
    const status = await this.api.current();
    if (!status.registered) {
      this.state = { kind: "consent" };
      return;
    }
    if (status.phase === "screening") {
      this.state = { kind: "rejected", reason: "screening requirements not met" };
      return;
    }
    if (status.phase === "done") {
      this.state = { kind: "done", completionCode: status.completion_code ?? "" };
      return;
    }
    if (status.pending) {
      await this.showItem(status.pending);
      return;
    }
    await this.advance();
  }

  // Pull the next directive from the server and enter the matching state.
  async advance(): Promise<void> {
    let item;
    try {
      item = await this.api.next();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // sequencing conflict (e.g. an unanswered item is outstanding);
        // the server cursor wins, re-sync instead of guessing
        await this.resume();
        return;
      }
      throw err;
    }
    if (item.kind === "done") {
      this.state = { kind: "done", completionCode: (item as DoneItem).completion_code };
      return;
    }
    if (item.kind === "break") {
      this.state = { kind: "break", minDurationS: item.min_duration_s, startedAt: this.now() };
      return;
    }
    await this.showItem(item);
  }

  private async showItem(item: TripletItem): Promise<void> {
    const presentation = new Presentation(item, this.loader, this.now);
    try {
      await presentation.preload();
    } catch (err) {
      this.state = { kind: "aborted", reason: String(err) };
      throw err;
    }
    presentation.begin();
    this.state = { kind: "item", presentation };
  }

  // The break screen has no dismiss control; continuing is only possible
  // once the configured minimum has elapsed.
  breakRemainingMs(): number {
    if (this.state.kind !== "break") return 0;
    const elapsed = this.now() - this.state.startedAt;
    return Math.max(0, this.state.minDurationS * 1000 - elapsed);
  }

  async finishBreak(): Promise<void> {
    if (this.state.kind !== "break") return;
    if (this.breakRemainingMs() > 0) {
      throw new Error(`break is not dismissable; ${this.breakRemainingMs()} ms remaining`);
    }
    await this.advance();
  }

  // Submit the choice for the on-screen item. Double activations while a
  // submission is in flight are ignored; delivery order and retries are
  // the queue's job.
  async choose(choice: ChoiceToken): Promise<boolean> {
    if (this.state.kind !== "item" || this.submitting) return false;
    const presentation = this.state.presentation;
    if (!presentation.buttonsEnabled()) return false;
    this.submitting = true;
    try {
      await this.queue.enqueue({
        tripletId: presentation.item.triplet_id,
        choice,
        latencyMs: presentation.latencyMs(),
      });
      await this.advance();
      return true;
    } finally {
      this.submitting = false;
    }
  }
}
