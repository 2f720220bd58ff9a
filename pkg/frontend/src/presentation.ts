import { TripletItem } from "./api";
import { FlickerClock, Now } from "./flicker";

// One on-screen presentation: three stimuli (reference + two coded sides),
// a shared flicker clock, and the response gate. Buttons stay disabled
// until every image is decoded AND one full flicker cycle has elapsed, so
// latency is measured from the first moment an answer was possible.

export interface ImageLoader {
  // resolves when the image is decoded and ready to paint
  load(url: string): Promise<unknown>;
}

export class PresentationError extends Error {
  constructor(message: string, public readonly url: string) {
    super(message);
    this.name = "PresentationError";
  }
}

export interface Incident {
  url: string;
  error: string;
}

export class Presentation {
  readonly clock: FlickerClock;
  private loaded = false;
  private firstEnabledAt: number | null = null;
  readonly incidents: Incident[] = [];

  constructor(
    public readonly item: TripletItem,
    private readonly loader: ImageLoader,
    private readonly now: Now = () => performance.now(),
    clock?: FlickerClock,
  ) {
    this.clock = clock ?? new FlickerClock(item.flicker_ms, now);
  }

  // Preload all three images before the clock may start. Each asset gets
  // one retry; a second failure aborts the item with a logged incident.
  async preload(): Promise<void> {
    for (const url of [this.item.reference, this.item.left, this.item.right]) {
      try {
        await this.loader.load(url);
      } catch (first) {
        this.incidents.push({ url, error: String(first) });
        try {
          await this.loader.load(url);
        } catch (second) {
          this.incidents.push({ url, error: String(second) });
          throw new PresentationError(`asset failed to load twice: ${url}`, url);
        }
      }
    }
    this.loaded = true;
  }

  get preloaded(): boolean {
    return this.loaded;
  }

  begin(): void {
    if (!this.loaded) throw new PresentationError("begin() before preload finished", "");
    this.clock.start();
  }

  // What each panel shows at a given phase. Phase 0 is the coded pair,
  // phase 1 is the reference on both panels, always in lockstep. For a
  // bias-control item left === right === reference, so the panels are
  // visually static even though the clock keeps swapping.
  panelImages(phase: 0 | 1): { left: string; right: string } {
    if (phase === 0) return { left: this.item.left, right: this.item.right };
    return { left: this.item.reference, right: this.item.reference };
  }

  // Response gate: at least one full cycle (2 dwells) after the clock
  // started with everything preloaded.
  buttonsEnabled(): boolean {
    const enabled = this.loaded && this.clock.cyclesCompleted() >= 1;
    if (enabled && this.firstEnabledAt === null) this.firstEnabledAt = this.now();
    return enabled;
  }

  // Latency is measured from the first enabled instant, not from display.
  latencyMs(): number {
    if (this.firstEnabledAt === null) {
      throw new PresentationError("latency requested before buttons enabled", "");
    }
    return this.now() - this.firstEnabledAt;
  }
}
