// Typed client for the study service HTTP API. The server owns all session
// state; this wrapper only shapes requests and decodes errors.

export type ChoiceToken = "left" | "right" | "not_sure";

export interface TripletItem {
  kind: "triplet";
  triplet_id: string;
  phase: "training" | "testing";
  index: number;
  total: number;
  reference: string; // asset paths, already swap-resolved by the server
  left: string;
  right: string;
  flicker_ms: number;
  swapped: boolean;
}

export interface BreakItem {
  kind: "break";
  min_duration_s: number;
}

export interface DoneItem {
  kind: "done";
  completion_code: string;
}

export type Item = TripletItem | BreakItem | DoneItem;

export interface ObserverStatus {
  observer_id: string;
  phase: string;
  registered: boolean;
  index: number;
  total: number;
  pending: TripletItem | null;
  completion_code?: string;
}

export interface ScreeningAnswers {
  consent: boolean;
  acuity_ok: boolean;
  color_vision_ok: boolean;
}

export class ApiError extends Error {
  constructor(message: string, public readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

async function decode(res: Response): Promise<any> {
  if (res.ok) return res.json();
  let detail = `${res.status}`;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(detail, res.status);
}

export class StudyApi {
  constructor(
    public readonly baseUrl: string,
    public readonly studyId: string,
    public readonly observerId: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private observerPath(tail: string): string {
    return `${this.baseUrl}/studies/${this.studyId}/observers/${this.observerId}/${tail}`;
  }

  async register(answers: ScreeningAnswers): Promise<{ observer_id: string; phase: string }> {
    const res = await this.fetchFn(this.observerPath("register"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(answers),
    });
    return decode(res);
  }

  async next(): Promise<Item> {
    return decode(await this.fetchFn(this.observerPath("next")));
  }

  async current(): Promise<ObserverStatus> {
    return decode(await this.fetchFn(this.observerPath("current")));
  }

  async submit(tripletId: string, choice: ChoiceToken, latencyMs: number): Promise<void> {
    const res = await this.fetchFn(this.observerPath("responses"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ triplet_id: tripletId, choice, latency_ms: latencyMs }),
    });
    await decode(res);
  }

  // asset paths arrive as absolute paths like /assets/<sid>/<handle>
  assetUrl(path: string): string {
    return this.baseUrl + path;
  }
}
