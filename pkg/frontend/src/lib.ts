// Pure view logic for the error-detection demo. Everything here is
// side-effect free so it can be unit tested without a DOM; main.ts wires
// these functions to the page.

export interface PredictResponse {
  tokens: string[];
  probs_incorrect: number[];
  labels: number[];
  model_version: string;
}

export interface ViewState {
  tokens: string[];
  probs: number[];
  threshold: number;
  error: string | null;
  modelVersion: string | null;
}

export const initialState: ViewState = {
  tokens: [],
  probs: [],
  threshold: 0.5,
  error: null,
  modelVersion: null,
};

export class InvalidResponseError extends Error {}

function isNumberArray(value: unknown): value is number[] {
  return Array.isArray(value) && value.every((v) => typeof v === "number" && isFinite(v));
}

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((v) => typeof v === "string");
}

// Throws InvalidResponseError unless the payload matches the documented
// /predict schema with all three arrays of equal length.
export function validateResponse(payload: unknown): PredictResponse {
  if (typeof payload !== "object" || payload === null) {
    throw new InvalidResponseError("response is not a JSON object");
  }
  const record = payload as Record<string, unknown>;
  if (!isStringArray(record.tokens)) {
    throw new InvalidResponseError("missing or malformed 'tokens'");
  }
  if (!isNumberArray(record.probs_incorrect)) {
    throw new InvalidResponseError("missing or malformed 'probs_incorrect'");
  }
  if (!Array.isArray(record.labels) || !record.labels.every((v) => v === 0 || v === 1)) {
    throw new InvalidResponseError("missing or malformed 'labels'");
  }
  if (typeof record.model_version !== "string") {
    throw new InvalidResponseError("missing 'model_version'");
  }
  const tokens = record.tokens;
  const probs = record.probs_incorrect;
  const labels = record.labels as number[];
  if (tokens.length !== probs.length || tokens.length !== labels.length) {
    throw new InvalidResponseError(
      `array length mismatch: ${tokens.length} tokens, ` +
      `${probs.length} probabilities, ${labels.length} labels`,
    );
  }
  if (probs.some((p) => p < 0 || p > 1)) {
    throw new InvalidResponseError("probabilities outside [0, 1]");
  }
  return {
    tokens,
    probs_incorrect: probs,
    labels,
    model_version: record.model_version,
  };
}

// Same rule the service applies: a token is an error iff its probability
// reaches the threshold. Keeping the comparison identical (>=) is what
// makes local slider re-labeling agree with server labels exactly.
export function labelsFromProbs(probs: number[], threshold: number): number[] {
  return probs.map((p) => (p >= threshold ? 1 : 0));
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// Background opacity proportional to P(incorrect); highlighted tokens get
// at least a visible floor so near-threshold errors do not vanish.
export function highlightAlpha(prob: number): number {
  return Math.max(0.15, Math.min(1, prob));
}

export function renderTokens(tokens: string[], probs: number[], threshold: number): string {
  const labels = labelsFromProbs(probs, threshold);
  const parts = tokens.map((token, i) => {
    const prob = probs[i];
    const title = `P(incorrect) = ${prob.toFixed(3)}`;
    if (labels[i] === 1) {
      const alpha = highlightAlpha(prob).toFixed(3);
      return (
        `<span class="tok hl" title="${title}" ` +
        `style="background: rgba(214, 69, 65, ${alpha})">${escapeHtml(token)}</span>`
      );
    }
    return `<span class="tok" title="${title}">${escapeHtml(token)}</span>`;
  });
  return parts.join(" ");
}

export function render(state: ViewState): string {
  const pieces: string[] = [];
  if (state.error !== null) {
    pieces.push(`<div class="banner">${escapeHtml(state.error)}</div>`);
  }
  if (state.tokens.length > 0) {
    pieces.push(`<p class="tokens">${renderTokens(state.tokens, state.probs, state.threshold)}</p>`);
    const flagged = labelsFromProbs(state.probs, state.threshold).reduce((a, b) => a + b, 0);
    const version = state.modelVersion === null ? "" : ` &middot; model ${escapeHtml(state.modelVersion)}`;
    pieces.push(
      `<p class="meta">${state.tokens.length} tokens, ${flagged} flagged at ` +
      `threshold ${state.threshold.toFixed(2)}${version}</p>`,
    );
  }
  return pieces.join("\n");
}

export function buildRequestBody(text: string, threshold: number): string {
  return JSON.stringify({ text, threshold });
}
