import { describe, expect, it } from "vitest";

import { ChannelReport, CharacterResult, ScribeClient } from "../src/api.js";
import { GameSession, formatScore } from "../src/session.js";
import { StrokeCapture } from "../src/stroke.js";

const ALPHABET = "abcdefghijklmnopqrstuvwxyz".split("");

interface MockOptions {
  failFirstSubmit?: boolean;
}

/** In-memory stand-in implementing the wire contract of the service. */
class MockService {
  prompts: string[];
  submissions: { prompt: string; samples: number[][] }[] = [];
  scoreRequests = 0;
  report: ChannelReport = {
    entropy_marginal: 4.70043971814109,
    mutual_information: 3.9,
    mean_log_loss: 0.25,
    mean_duration: 1.2345678,
    rate_mi: 3.1598,
    rate_ll: 3.6041234567,
    rate_ideal: 3.8076,
    n: 26,
  };
  private failNext: boolean;

  constructor(opts: MockOptions = {}) {
    // Deterministic permutation: reversed alphabet.
    this.prompts = [...ALPHABET].reverse();
    this.failNext = opts.failFirstSubmit ?? false;
  }

  client(): ScribeClient {
    const respond = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      });

    const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
      if (url.endsWith("/sessions") && init?.method === "POST") {
        return respond({ session_id: 7, prompts: this.prompts });
      }
      if (url.includes("/characters")) {
        if (this.failNext) {
          this.failNext = false;
          throw new TypeError("network down");
        }
        const body = JSON.parse(String(init?.body)) as {
          prompt: string;
          samples: number[][];
        };
        this.submissions.push(body);
        const posterior: Record<string, number> = {};
        for (const c of ALPHABET) posterior[c] = c === body.prompt ? 0.9 : 0.1 / 25;
        const result: CharacterResult = {
          posterior,
          prediction: body.prompt,
          duration_s: body.samples[body.samples.length - 1][2] / 1000,
        };
        return respond(result);
      }
      if (url.endsWith("/score")) {
        this.scoreRequests += 1;
        return respond(this.report);
      }
      return respond({ detail: "not found" }, 404);
    };
    return new ScribeClient("http://mock", fetchImpl);
  }
}

/** Scripted pointer playback: a small drag whose shape encodes the letter. */
function playStroke(letter: string): number[][] {
  const capture = new StrokeCapture();
  const code = letter.charCodeAt(0) - 96;
  capture.start(code, 0, 1000);
  for (let i = 1; i <= 8; i++) {
    capture.move(code + i, (i * code) % 13, 1000 + i * 20);
  }
  expect(capture.end()).toBe("kept");
  return capture.takeCompleted()!;
}

describe("GameSession", () => {
  it("plays a full scripted session and shows the service score", async () => {
    const mock = new MockService();
    const session = new GameSession(mock.client(), "tester");
    await session.start();
    expect(session.phase).toBe("drawing");

    const prompted: string[] = [];
    while (session.phase !== "finished") {
      const prompt = session.currentPrompt()!;
      prompted.push(prompt);
      const result = await session.submitStroke(playStroke(prompt));
      expect(result).not.toBeNull();
      expect(result!.prediction).toBe(prompt);
    }

    // Each of the 26 letters prompted exactly once, in service order.
    expect(prompted).toHaveLength(26);
    expect([...prompted].sort()).toEqual([...ALPHABET]);
    expect(prompted).toEqual(mock.prompts);

    // The displayed score is the service's number at display rounding.
    expect(session.score).not.toBeNull();
    expect(mock.scoreRequests).toBe(1);
    expect(formatScore(session.score!)).toBe("3.604 bits/s");
    expect(session.score!.rate_ll).toBe(mock.report.rate_ll);
  });

  it("sends sample arrays unchanged", async () => {
    const mock = new MockService();
    const session = new GameSession(mock.client(), "tester");
    await session.start();
    const samples = playStroke(session.currentPrompt()!);
    await session.submitStroke(samples);
    expect(mock.submissions[0].samples).toEqual(samples);
  });

  it("parks a failed submission and retries without losing state", async () => {
    const mock = new MockService({ failFirstSubmit: true });
    const session = new GameSession(mock.client(), "tester");
    await session.start();
    const prompt = session.currentPrompt()!;
    const samples = playStroke(prompt);

    const first = await session.submitStroke(samples);
    expect(first).toBeNull();
    expect(session.phase).toBe("retry");
    expect(session.lastError).toContain("network down");
    expect(session.currentPrompt()).toBe(prompt);

    const second = await session.retry();
    expect(second).not.toBeNull();
    expect(mock.submissions[0].samples).toEqual(samples);
    expect(session.outcomes).toHaveLength(1);
    expect(session.phase).toBe("drawing");
  });

  it("refuses a second in-flight submission", async () => {
    const mock = new MockService();
    const session = new GameSession(mock.client(), "tester");
    await session.start();
    const p = session.submitStroke(playStroke(session.currentPrompt()!));
    await expect(
      session.submitStroke(playStroke("z")),
    ).rejects.toThrow(/cannot submit/);
    await p;
  });

  it("rejects a non-permutation prompt list", async () => {
    const mock = new MockService();
    mock.prompts = [...ALPHABET.slice(0, 25), "a"];
    const session = new GameSession(mock.client(), "tester");
    await expect(session.start()).rejects.toThrow(/permutation/);
  });
});
