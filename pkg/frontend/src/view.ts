import type { ClassifyResponse, ViewState } from "./types";
import { CLASS_ORDER, displayName } from "./types";

function clear(container: HTMLElement): void {
  container.textContent = "";
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Render a diagnosis: winning label, confidence bar, all per-class
 * probabilities in class-code order, and the retake banner exactly when the
 * service attached a recommendation.
 */
export function renderDiagnosis(response: ClassifyResponse, container: HTMLElement): void {
  clear(container);
  const pct = Math.round(response.confidence * 100);

  if (response.recommendation !== null) {
    const banner = el("div", "retake-banner", response.recommendation);
    banner.setAttribute("role", "alert");
    container.appendChild(banner);
  }

  container.appendChild(el("h2", "diagnosis-label", displayName(response.label)));

  const bar = el("div", "confidence-bar");
  const fill = el("div", "confidence-fill");
  fill.style.width = `${pct}%`;
  bar.appendChild(fill);
  const wrap = el("div", "confidence");
  wrap.appendChild(el("span", "confidence-pct", `${pct}%`));
  wrap.appendChild(bar);
  container.appendChild(wrap);

  const list = el("ul", "per-class");
  const order = CLASS_ORDER.filter((k) => k in response.per_class);
  const extras = Object.keys(response.per_class).filter((k) => !CLASS_ORDER.includes(k));
  for (const key of [...order, ...extras]) {
    const prob = response.per_class[key];
    list.appendChild(el("li", "per-class-row", `${displayName(key)}: ${(prob * 100).toFixed(1)}%`));
  }
  container.appendChild(list);

  container.appendChild(
    el("p", "model-note", `model: ${response.model} (${response.latency_ms.toFixed(0)} ms)`),
  );
}

export function renderError(message: string, container: HTMLElement): void {
  clear(container);
  const box = el("div", "error-box");
  box.setAttribute("role", "alert");
  box.appendChild(el("strong", undefined, "Something went wrong"));
  box.appendChild(el("p", "error-message", message));
  container.appendChild(box);
}

export function renderIdle(container: HTMLElement): void {
  clear(container);
  container.appendChild(
    el("p", "hint", "Capture or upload a photo of a banana leaf to get a diagnosis."),
  );
}

export function renderSubmitting(container: HTMLElement): void {
  clear(container);
  container.appendChild(el("p", "hint", "Analyzing the leaf..."));
}

/** Paint the whole result area from the current state. */
export function render(state: ViewState, container: HTMLElement): void {
  switch (state.phase) {
    case "diagnosed":
    case "retake-advised":
      renderDiagnosis(state.lastResponse as ClassifyResponse, container);
      break;
    case "error":
      renderError(state.errorMessage ?? "unknown error", container);
      break;
    case "submitting":
      renderSubmitting(container);
      break;
    default:
      renderIdle(container);
  }
}
