// Unistroke capture: one pen-down..pen-up trace per character. Samples are
// kept exactly as captured; the server does all normalization.

export interface PointerSample {
  x: number;
  y: number;
  t: number;
}

export type StrokeEnd = "kept" | "discarded";

export class StrokeCapture {
  private samples: PointerSample[] = [];
  private active = false;
  private completed: PointerSample[] | null = null;

  get isActive(): boolean {
    return this.active;
  }

  get hasStroke(): boolean {
    return this.completed !== null;
  }

  get liveSamples(): readonly PointerSample[] {
    return this.samples;
  }

  /** Pen down. Starting a new stroke replaces any unsent one. */
  start(x: number, y: number, t: number): void {
    this.completed = null;
    this.samples = [{ x, y, t }];
    this.active = true;
  }

  /** Movement while down; events that do not advance time are dropped so
   *  timestamps stay strictly monotone. */
  move(x: number, y: number, t: number): void {
    if (!this.active) return;
    const last = this.samples[this.samples.length - 1];
    if (t <= last.t) return;
    this.samples.push({ x, y, t });
  }

  /** Pen up. A click without movement cannot form a trace and is discarded. */
  end(): StrokeEnd {
    if (!this.active) return "discarded";
    this.active = false;
    if (this.samples.length < 2) {
      this.samples = [];
      return "discarded";
    }
    this.completed = this.samples;
    this.samples = [];
    return "kept";
  }

  /** The finished stroke as [x, y, t] rows, bit-faithful to the events. */
  takeCompleted(): number[][] | null {
    if (this.completed === null) return null;
    const rows = this.completed.map((s) => [s.x, s.y, s.t]);
    this.completed = null;
    return rows;
  }
}
