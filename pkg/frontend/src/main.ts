// DOM wiring for the demo page. State never persists across reloads and
// at most one /predict request is in flight: a new check aborts the
// pending one.

import {
  InvalidResponseError,
  ViewState,
  buildRequestBody,
  initialState,
  render,
  validateResponse,
} from "./lib.js";

const textarea = document.getElementById("text") as HTMLTextAreaElement;
const checkButton = document.getElementById("check") as HTMLButtonElement;
const slider = document.getElementById("threshold") as HTMLInputElement;
const sliderValue = document.getElementById("threshold-value") as HTMLElement;
const serviceInput = document.getElementById("service-url") as HTMLInputElement;
const resultArea = document.getElementById("result") as HTMLElement;

let state: ViewState = { ...initialState };
let inflight: AbortController | null = null;

function paint(): void {
  sliderValue.textContent = Number(slider.value).toFixed(2);
  resultArea.innerHTML = render(state);
}

async function check(): Promise<void> {
  const text = textarea.value;
  if (text.trim() === "") {
    state = { ...state, error: "Enter some text first." };
    paint();
    return;
  }
  if (inflight !== null) {
    inflight.abort(); // the newer request supersedes the pending one
  }
  const controller = new AbortController();
  inflight = controller;
  const threshold = Number(slider.value);
  try {
    const response = await fetch(`${serviceInput.value.replace(/\/$/, "")}/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: buildRequestBody(text, threshold),
      signal: controller.signal,
    });
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const detail = payload && typeof payload.error === "string" ? payload.error : response.statusText;
      state = { ...state, error: `Service error ${response.status}: ${detail}` };
      paint();
      return;
    }
    const parsed = validateResponse(payload);
    state = {
      tokens: parsed.tokens,
      probs: parsed.probs_incorrect,
      threshold,
      error: null,
      modelVersion: parsed.model_version,
    };
    paint();
  } catch (err) {
    if (controller.signal.aborted) {
      return; // superseded by a newer check
    }
    const reason =
      err instanceof InvalidResponseError
        ? `Invalid response: ${err.message}`
        : "Service unreachable. Is `errdet serve` running?";
    state = { ...state, error: reason };
    paint();
  } finally {
    if (inflight === controller) {
      inflight = null;
    }
  }
}

checkButton.addEventListener("click", () => {
  void check();
});
textarea.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && (event.ctrlKey || event.metaKey)) {
    void check();
  }
});

// The slider re-renders from the stored probabilities without another
// request; labels are recomputed client-side.
slider.addEventListener("input", () => {
  state = { ...state, threshold: Number(slider.value) };
  paint();
});

paint();
