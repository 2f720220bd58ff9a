import { describe, expect, it } from "vitest";
import { ApiError } from "../src/api";
import { PendingSubmission, SubmissionQueue } from "../src/queue";

const noSleep = async () => {};

function submission(id: string): PendingSubmission {
  return { tripletId: id, choice: "left", latencyMs: 100 };
}

describe("SubmissionQueue", () => {
  it("retries network failures and delivers exactly once", async () => {
    const delivered: string[] = [];
    let drops = 2;
    const queue = new SubmissionQueue(async (s) => {
      if (drops > 0) {
        drops--;
        throw new TypeError("fetch failed"); // what fetch throws offline
      }
      delivered.push(s.tripletId);
    }, noSleep);

    await queue.enqueue(submission("t1"));
    expect(delivered).toEqual(["t1"]);
  });

  it("treats a duplicate rejection after a lost ack as delivered", async () => {
    // the server processed attempt 1 but the response never arrived;
    // attempt 2 then gets the duplicate conflict, which means success
    const serverLog: string[] = [];
    let ackLost = true;
    const queue = new SubmissionQueue(async (s) => {
      if (serverLog[serverLog.length - 1] === s.tripletId) {
        throw new ApiError(`duplicate response for triplet '${s.tripletId}'`, 409);
      }
      serverLog.push(s.tripletId);
      if (ackLost) {
        ackLost = false;
        throw new TypeError("connection reset before response");
      }
    }, noSleep);

    await queue.enqueue(submission("t1"));
    expect(serverLog).toEqual(["t1"]); // exactly one server-side record
  });

  it("preserves submission order across retries", async () => {
    const delivered: string[] = [];
    let flaky = true;
    const queue = new SubmissionQueue(async (s) => {
      if (s.tripletId === "t2" && flaky) {
        flaky = false;
        throw new TypeError("offline");
      }
      delivered.push(s.tripletId);
    }, noSleep);

    await Promise.all([
      queue.enqueue(submission("t1")),
      queue.enqueue(submission("t2")),
      queue.enqueue(submission("t3")),
    ]);
    expect(delivered).toEqual(["t1", "t2", "t3"]);
  });

  it("does not retry protocol errors", async () => {
    let calls = 0;
    const queue = new SubmissionQueue(async () => {
      calls++;
      throw new ApiError("invalid choice token 'maybe'", 400);
    }, noSleep);

    await expect(queue.enqueue(submission("t1"))).rejects.toThrow(/invalid choice/);
    expect(calls).toBe(1);
    expect(queue.length).toBe(0);
  });

  it("gives up after the attempt budget", async () => {
    let calls = 0;
    const queue = new SubmissionQueue(async () => {
      calls++;
      throw new TypeError("offline");
    }, noSleep);
    queue.maxAttempts = 3;

    await expect(queue.enqueue(submission("t1"))).rejects.toThrow(/offline/);
    expect(calls).toBe(3);
  });
});
