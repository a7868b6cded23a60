import { ScribeClient } from "./api.js";
import { GameSession } from "./session.js";
import { StrokeCapture } from "./stroke.js";
import { GameView } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

window.addEventListener("DOMContentLoaded", () => {
  const params = new URLSearchParams(window.location.search);
  const apiBase = params.get("api") ?? "http://127.0.0.1:8000";
  const userId = params.get("user") ?? "player";

  const canvas = el<HTMLCanvasElement>("pad");
  const view = new GameView(
    canvas,
    el("prompt"),
    el("status"),
    el("bars"),
    el("score"),
  );
  const client = new ScribeClient(apiBase);
  const session = new GameSession(client, userId);
  const capture = new StrokeCapture();
  const submitBtn = el<HTMLButtonElement>("submit");
  const retryBtn = el<HTMLButtonElement>("retry");

  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;

  let lastDrawn: { x: number; y: number; t: number } | null = null;

  canvas.addEventListener("pointerdown", (ev) => {
    if (session.phase !== "drawing") return;
    canvas.setPointerCapture(ev.pointerId);
    view.clearCanvas();
    capture.start(ev.offsetX, ev.offsetY, ev.timeStamp);
    lastDrawn = { x: ev.offsetX, y: ev.offsetY, t: ev.timeStamp };
  });

  canvas.addEventListener("pointermove", (ev) => {
    if (!capture.isActive) return;
    capture.move(ev.offsetX, ev.offsetY, ev.timeStamp);
    const next = { x: ev.offsetX, y: ev.offsetY, t: ev.timeStamp };
    if (lastDrawn) view.drawSegment(lastDrawn, next);
    lastDrawn = next;
  });

  canvas.addEventListener("pointerup", () => {
    if (!capture.isActive) return;
    if (capture.end() === "discarded") {
      view.notice("stroke too short; try again");
      view.clearCanvas();
    }
    lastDrawn = null;
  });

  submitBtn.addEventListener("click", async () => {
    const samples = capture.takeCompleted();
    if (samples === null) {
      view.notice("draw the letter first");
      return;
    }
    const prompt = session.currentPrompt();
    if (prompt === null) return;
    submitBtn.disabled = true;
    const result = await session.submitStroke(samples);
    submitBtn.disabled = false;
    if (result === null) {
      view.showRetry(session.lastError ?? "network error");
      retryBtn.hidden = false;
      return;
    }
    view.showResult(prompt, result);
    afterResult();
  });

  retryBtn.addEventListener("click", async () => {
    retryBtn.hidden = true;
    const prompt = session.currentPrompt();
    const result = await session.retry();
    if (result === null) {
      view.showRetry(session.lastError ?? "network error");
      retryBtn.hidden = false;
      return;
    }
    if (prompt !== null) view.showResult(prompt, result);
    afterResult();
  });

  function afterResult(): void {
    view.clearCanvas();
    if (session.phase === "finished" && session.score) {
      view.showScore(session.score);
      return;
    }
    const { done, total } = session.progress;
    window.setTimeout(
      () => view.showPrompt(session.currentPrompt(), done, total),
      800,
    );
  }

  session
    .start()
    .then(() => {
      const { done, total } = session.progress;
      view.showPrompt(session.currentPrompt(), done, total);
    })
    .catch((err) => view.notice(`cannot reach service: ${err}`));
});
