// Writing-game session state machine: prompting -> drawing -> awaiting-result
// -> next, with at most one submission in flight. A failed submission parks
// the stroke for retry instead of losing it.

import { ChannelReport, CharacterResult, ScribeClient } from "./api.js";

export type Phase =
  | "idle"
  | "drawing"
  | "awaiting-result"
  | "retry"
  | "finished";

export interface CharacterOutcome {
  prompt: string;
  result: CharacterResult;
}

const ALPHABET = "abcdefghijklmnopqrstuvwxyz";

export class GameSession {
  phase: Phase = "idle";
  sessionId = 0;
  prompts: string[] = [];
  outcomes: CharacterOutcome[] = [];
  score: ChannelReport | null = null;
  lastError: string | null = null;
  private pendingSamples: number[][] | null = null;

  constructor(
    private client: ScribeClient,
    private userId: string,
  ) {}

  async start(): Promise<void> {
    const started = await this.client.startSession(this.userId);
    const sorted = [...started.prompts].sort().join("");
    if (sorted !== ALPHABET) {
      throw new Error("service sent a prompt list that is not a permutation");
    }
    this.sessionId = started.session_id;
    this.prompts = started.prompts;
    this.outcomes = [];
    this.score = null;
    this.lastError = null;
    this.phase = "drawing";
  }

  currentPrompt(): string | null {
    if (this.phase === "finished" || this.phase === "idle") return null;
    return this.prompts[this.outcomes.length] ?? null;
  }

  get progress(): { done: number; total: number } {
    return { done: this.outcomes.length, total: this.prompts.length };
  }

  /** Submit a finished stroke for the current prompt. Returns the decoded
   *  result, or null when the submission failed and is parked for retry. */
  async submitStroke(samples: number[][]): Promise<CharacterResult | null> {
    if (this.phase !== "drawing") {
      throw new Error(`cannot submit in phase ${this.phase}`);
    }
    return this.send(samples);
  }

  /** Resend the parked stroke after a network failure. */
  async retry(): Promise<CharacterResult | null> {
    if (this.phase !== "retry" || this.pendingSamples === null) {
      throw new Error("nothing to retry");
    }
    const samples = this.pendingSamples;
    this.phase = "drawing";
    return this.send(samples);
  }

  private async send(samples: number[][]): Promise<CharacterResult | null> {
    const prompt = this.currentPrompt();
    if (prompt === null) throw new Error("no prompt outstanding");
    this.phase = "awaiting-result";
    this.pendingSamples = samples;
    let result: CharacterResult;
    try {
      result = await this.client.submitCharacter(
        this.userId,
        this.sessionId,
        prompt,
        samples,
      );
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      this.phase = "retry";
      return null;
    }
    this.pendingSamples = null;
    this.lastError = null;
    this.outcomes.push({ prompt, result });
    if (this.outcomes.length === this.prompts.length) {
      this.score = await this.client.sessionScore(this.userId, this.sessionId);
      this.phase = "finished";
    } else {
      this.phase = "drawing";
    }
    return result;
  }
}

/** Session score exactly as the service reported it, at display precision. */
export function formatScore(report: ChannelReport): string {
  return `${report.rate_ll.toFixed(3)} bits/s`;
}
