import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { setupApp } from "../src/main";
import type { ClassifyResponse } from "../src/types";

function mountDom(): void {
  document.body.innerHTML = `
    <p id="service-status"></p>
    <video id="camera-preview" hidden></video>
    <button id="capture-button" disabled>Capture</button>
    <input id="file-input" type="file">
    <section id="result"></section>
  `;
}

function serviceResponse(recommendation: string | null): ClassifyResponse {
  return {
    label: "fusarium_wilt_race1",
    confidence: recommendation ? 0.61 : 0.88,
    per_class: { black_sigatoka: 0.07, fusarium_wilt_race1: 0.88, healthy: 0.05 },
    recommendation,
    model: "tiny-residual",
    latency_ms: 4.0,
  };
}

function mockService(recommendation: string | null) {
  return vi.fn(async (url: string) => {
    if (String(url).endsWith("/v1/health")) {
      return new Response(JSON.stringify({ status: "ok", model: "tiny-residual" }), {
        status: 200,
      });
    }
    return new Response(JSON.stringify(serviceResponse(recommendation)), { status: 200 });
  });
}

async function uploadFile(): Promise<void> {
  const input = document.getElementById("file-input") as HTMLInputElement;
  const file = new File([new Uint8Array([137, 80, 78, 71])], "leaf.png", {
    type: "image/png",
  });
  Object.defineProperty(input, "files", { value: [file], configurable: true });
  input.dispatchEvent(new Event("change"));
  await vi.waitFor(() => {
    const result = document.getElementById("result") as HTMLElement;
    if (!result.querySelector(".diagnosis-label") && !result.querySelector(".error-box")) {
      throw new Error("no outcome rendered yet");
    }
  });
}

beforeEach(() => {
  mountDom();
});

afterEach(() => {
  vi.unstubAllGlobals();
  vi.restoreAllMocks();
});

describe("app wiring (camera denied, file-upload fallback)", () => {
  it("submits an uploaded file to the service and renders the diagnosis", async () => {
    const fetchMock = mockService(null);
    vi.stubGlobal("fetch", fetchMock);
    setupApp();
    await uploadFile();

    const classifyCalls = fetchMock.mock.calls.filter(([u]) =>
      String(u).endsWith("/v1/classify"),
    );
    expect(classifyCalls).toHaveLength(1);
    expect(classifyCalls[0][1]?.body).toBeInstanceOf(FormData);

    const result = document.getElementById("result") as HTMLElement;
    expect(result.querySelector(".diagnosis-label")?.textContent).toBe("Fusarium wilt race 1");
    expect(result.querySelector(".confidence-pct")?.textContent).toBe("88%");
    expect(result.querySelector(".retake-banner")).toBeNull();
  });

  it("renders the retake banner when the service recommends one", async () => {
    vi.stubGlobal("fetch", mockService("Retake a clearer photo of the leaf"));
    setupApp();
    await uploadFile();

    const result = document.getElementById("result") as HTMLElement;
    const banner = result.querySelector(".retake-banner");
    expect(banner).not.toBeNull();
    expect(banner?.textContent).toBe("Retake a clearer photo of the leaf");
  });

  it("hides the capture button when no camera is available", async () => {
    vi.stubGlobal("fetch", mockService(null));
    setupApp();
    await vi.waitFor(() => {
      const button = document.getElementById("capture-button") as HTMLButtonElement;
      if (!button.hidden) throw new Error("camera fallback not applied yet");
    });
  });

  it("shows a structured error when the service rejects the upload", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string) => {
        if (String(url).endsWith("/v1/health")) {
          return new Response(JSON.stringify({ status: "ok", model: "m" }), { status: 200 });
        }
        return new Response(
          JSON.stringify({ code: "too_large", message: "body exceeds 10485760 bytes" }),
          { status: 413 },
        );
      }),
    );
    setupApp();
    await uploadFile();
    const result = document.getElementById("result") as HTMLElement;
    expect(result.querySelector(".error-box")?.textContent).toContain("body exceeds");
  });
});
