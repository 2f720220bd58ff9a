import { ApiError, ChoiceToken } from "./api";

// Ordered outbound submission queue. Responses must reach the server in the
// order they were made, exactly once, across network failures. The server
// deduplicates resubmissions of the last answered triplet with a 409, so a
// retry after a lost acknowledgement is safe: that 409 means "delivered".

export interface PendingSubmission {
  tripletId: string;
  choice: ChoiceToken;
  latencyMs: number;
}

export type SubmitFn = (s: PendingSubmission) => Promise<void>;

interface QueueEntry {
  submission: PendingSubmission;
  resolve: () => void;
  reject: (err: unknown) => void;
}

const DUPLICATE = /duplicate response/;

export class SubmissionQueue {
  private entries: QueueEntry[] = [];
  private draining = false;
  public retryDelayMs = 1000;
  public maxAttempts = 8;

  constructor(
    private readonly submitFn: SubmitFn,
    private readonly sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((r) => setTimeout(r, ms)),
  ) {}

  get length(): number {
    return this.entries.length;
  }

  // Resolves when THIS submission is acknowledged; rejects only on
  // non-retryable server errors (bad request, sequencing conflict).
  enqueue(submission: PendingSubmission): Promise<void> {
    return new Promise<void>((resolve, reject) => {
      this.entries.push({ submission, resolve, reject });
      void this.drain();
    });
  }

  private async drain(): Promise<void> {
    if (this.draining) return;
    this.draining = true;
    try {
      while (this.entries.length > 0) {
        const entry = this.entries[0];
        try {
          await this.deliver(entry.submission);
          this.entries.shift();
          entry.resolve();
        } catch (err) {
          this.entries.shift();
          entry.reject(err);
        }
      }
    } finally {
      this.draining = false;
    }
  }

  private async deliver(submission: PendingSubmission): Promise<void> {
    for (let attempt = 1; ; attempt++) {
      try {
        await this.submitFn(submission);
        return;
      } catch (err) {
        if (err instanceof ApiError) {
          // the ack for a previous attempt was lost but the server has it
          if (err.status === 409 && DUPLICATE.test(err.message)) return;
          throw err; // real protocol error; retrying cannot help
        }
        // network-level failure: keep the entry and retry in order
        if (attempt >= this.maxAttempts) throw err;
        await this.sleep(this.retryDelayMs);
      }
    }
  }
}
