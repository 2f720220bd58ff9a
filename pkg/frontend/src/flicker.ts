// Flicker timing. Both panels alternate between their coded image and the
// reference at a fixed dwell (500 ms, 2 Hz cycle). A naive
// setInterval(swap, 500) accumulates timer lag, so the phase is always
// computed from one monotonic origin: phase(t) = floor((t - t0) / dwell) % 2.
// Late callbacks then cause a late single swap, never a shifted schedule.

export type Now = () => number;

export class FlickerClock {
  private t0: number | null = null;

  constructor(
    public readonly dwellMs: number,
    private readonly now: Now = () => performance.now(),
  ) {
    if (!(dwellMs > 0)) throw new Error(`dwell must be positive, got ${dwellMs}`);
  }

  start(): void {
    if (this.t0 === null) this.t0 = this.now();
  }

  get started(): boolean {
    return this.t0 !== null;
  }

  elapsed(): number {
    return this.t0 === null ? 0 : this.now() - this.t0;
  }

  // 0 shows the coded images, 1 shows the reference on both panels
  phase(): 0 | 1 {
    return (Math.floor(this.elapsed() / this.dwellMs) % 2) as 0 | 1;
  }

  // one full cycle = both stimuli shown once = 2 dwells
  cyclesCompleted(): number {
    return Math.floor(this.elapsed() / (2 * this.dwellMs));
  }

  msToNextBoundary(): number {
    const into = this.elapsed() % this.dwellMs;
    return this.dwellMs - into;
  }
}

export type Schedule = (fn: () => void, ms: number) => unknown;
export type Cancel = (handle: unknown) => void;

export interface SwapSample {
  phase: 0 | 1;
  at: number; // clock time of the callback, for timing probes
}

// Drives a callback on every dwell boundary. Each timeout is aimed at the
// next absolute boundary, so scheduling error never accumulates.
export class FlickerDriver {
  private handle: unknown = null;
  private running = false;
  private lastPhase: 0 | 1 | null = null;
  readonly samples: SwapSample[] = [];

  constructor(
    public readonly clock: FlickerClock,
    private readonly onSwap: (phase: 0 | 1) => void,
    private readonly schedule: Schedule = (fn, ms) => setTimeout(fn, ms),
    private readonly cancel: Cancel = (h) => clearTimeout(h as any),
    private readonly now: Now = () => performance.now(),
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    this.clock.start();
    this.lastPhase = this.clock.phase();
    this.onSwap(this.lastPhase); // paint the initial phase immediately
    this.arm();
  }

  stop(): void {
    this.running = false;
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
  }

  private arm(): void {
    this.handle = this.schedule(() => this.fire(), this.clock.msToNextBoundary());
  }

  private fire(): void {
    if (!this.running) return;
    const phase = this.clock.phase();
    // a wakeup fractionally before the boundary is not a swap; just re-aim
    if (phase !== this.lastPhase) {
      this.lastPhase = phase;
      this.samples.push({ phase, at: this.now() });
      this.onSwap(phase);
    }
    this.arm();
  }

  // Mean time between observed swaps; the steady-state dwell measurement.
  meanDwellMs(): number {
    const at = this.samples.map((s) => s.at);
    if (at.length < 2) return NaN;
    return (at[at.length - 1] - at[0]) / (at.length - 1);
  }
}
