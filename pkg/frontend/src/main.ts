import { fetchHealth, serviceUrlFromLocation, submitImage, SubmitError } from "./api";
import { captureFrame, startCamera, stopCamera } from "./camera";
import { applyError, applyResponse, beginSubmit, initialState } from "./state";
import type { ViewState } from "./types";
import { render } from "./view";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function setupApp(root: Document = document): void {
  const video = byId<HTMLVideoElement>("camera-preview");
  const captureButton = byId<HTMLButtonElement>("capture-button");
  const fileInput = byId<HTMLInputElement>("file-input");
  const result = byId<HTMLElement>("result");
  const status = byId<HTMLElement>("service-status");

  let state: ViewState = initialState(
    serviceUrlFromLocation(root.location.search, root.location.origin),
  );
  render(state, result);

  void fetchHealth(state.serviceUrl).then((health) => {
    status.textContent = health
      ? `service ok - model ${health.model}`
      : `service unreachable at ${state.serviceUrl}`;
  });

  let cameraReady = false;
  void startCamera(video).then((stream) => {
    cameraReady = stream !== null;
    captureButton.disabled = !cameraReady;
    video.hidden = !cameraReady;
    if (!cameraReady) {
      captureButton.hidden = true; // upload remains the only entry point
    }
  });

  const setBusy = (busy: boolean) => {
    captureButton.disabled = busy || !cameraReady;
    fileInput.disabled = busy;
  };

  async function submit(blob: Blob): Promise<void> {
    if (state.phase === "submitting") return; // single in-flight request
    state = beginSubmit(state);
    setBusy(true);
    render(state, result);
    try {
      const response = await submitImage(blob, state.serviceUrl);
      state = applyResponse(state, response);
    } catch (err) {
      const message = err instanceof SubmitError ? err.message : String(err);
      state = applyError(state, message);
    } finally {
      setBusy(false);
    }
    render(state, result);
    if (state.phase === "retake-advised") {
      (cameraReady ? captureButton : fileInput).focus();
    }
  }

  captureButton.addEventListener("click", () => {
    void captureFrame(video).then(
      (blob) => submit(blob),
      (err) => {
        state = applyError(state, String(err));
        render(state, result);
      },
    );
  });

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) {
      void submit(file);
      fileInput.value = "";
    }
  });

  window.addEventListener("beforeunload", () => stopCamera(video));
}

function boot(): void {
  // only auto-start on the real page; test harnesses mount their own DOM
  // and call setupApp() explicitly
  if (document.getElementById("result")) {
    setupApp();
  }
}

if (typeof document !== "undefined") {
  if (document.readyState !== "loading") {
    boot();
  } else {
    document.addEventListener("DOMContentLoaded", boot);
  }
}
