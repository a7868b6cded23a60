// DOM rendering. Every number on screen is copied from a service response.

import { ChannelReport, CharacterResult } from "./api.js";
import { PointerSample } from "./stroke.js";
import { formatScore } from "./session.js";

const ALPHABET = "abcdefghijklmnopqrstuvwxyz";

export class GameView {
  private ctx: CanvasRenderingContext2D;

  constructor(
    private canvas: HTMLCanvasElement,
    private promptEl: HTMLElement,
    private statusEl: HTMLElement,
    private barsEl: HTMLElement,
    private scoreEl: HTMLElement,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2D canvas not supported");
    this.ctx = ctx;
    this.buildBars();
  }

  private buildBars(): void {
    this.barsEl.innerHTML = "";
    for (const c of ALPHABET) {
      const cell = document.createElement("div");
      cell.className = "bar-cell";
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.id = `bar-${c}`;
      const tag = document.createElement("span");
      tag.textContent = c;
      cell.appendChild(bar);
      cell.appendChild(tag);
      this.barsEl.appendChild(cell);
    }
  }

  showPrompt(letter: string | null, done: number, total: number): void {
    this.promptEl.textContent = letter ?? "";
    this.statusEl.textContent =
      letter === null ? "" : `write this letter (${done + 1}/${total})`;
  }

  notice(text: string): void {
    this.statusEl.textContent = text;
  }

  clearCanvas(): void {
    this.ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
  }

  drawSegment(from: PointerSample, to: PointerSample): void {
    this.ctx.strokeStyle = "#223";
    this.ctx.lineWidth = 3;
    this.ctx.lineCap = "round";
    this.ctx.beginPath();
    this.ctx.moveTo(from.x, from.y);
    this.ctx.lineTo(to.x, to.y);
    this.ctx.stroke();
  }

  showResult(prompt: string, result: CharacterResult): void {
    const hit = result.prediction === prompt;
    this.statusEl.textContent = hit
      ? `recognized "${result.prediction}"`
      : `read as "${result.prediction}"`;
    for (const c of ALPHABET) {
      const bar = this.barsEl.querySelector<HTMLElement>(`#bar-${c}`);
      if (!bar) continue;
      const p = result.posterior[c] ?? 0;
      bar.style.height = `${Math.round(p * 60)}px`;
      bar.classList.toggle("winner", c === result.prediction);
    }
  }

  showScore(report: ChannelReport): void {
    this.scoreEl.textContent = `session score: ${formatScore(report)}`;
    this.promptEl.textContent = "✓";
    this.statusEl.textContent = "session complete";
  }

  showRetry(message: string): void {
    this.statusEl.textContent = `submission failed (${message}); press retry`;
  }
}
