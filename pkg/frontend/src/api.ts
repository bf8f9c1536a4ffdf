import type { ClassifyResponse } from "./types";

export const MAX_UPLOAD_BYTES = 10 * 1024 * 1024;

export class SubmitError extends Error {
  status: number | null;
  code: string;

  constructor(message: string, status: number | null = null, code = "client_error") {
    super(message);
    this.status = status;
    this.code = code;
  }
}

/** Resolve the service base URL: ?service=URL overrides, else same-origin. */
export function serviceUrlFromLocation(search: string, origin: string): string {
  const params = new URLSearchParams(search);
  const override = params.get("service");
  const base = override && override.length > 0 ? override : origin;
  return base.replace(/\/+$/, "");
}

/**
 * POST the captured image to the diagnosis endpoint.
 *
 * Size is checked client-side before any network traffic; server errors are
 * surfaced with their structured {code, message} body when present.
 */
export async function submitImage(
  image: Blob,
  serviceUrl: string,
  threshold?: number,
): Promise<ClassifyResponse> {
  if (image.size === 0) {
    throw new SubmitError("The captured image is empty", null, "empty_image");
  }
  if (image.size > MAX_UPLOAD_BYTES) {
    throw new SubmitError(
      `Image is ${(image.size / 1048576).toFixed(1)} MiB; the limit is 10 MiB`,
      null,
      "too_large",
    );
  }
  const form = new FormData();
  form.append("image", image, "capture.png");
  if (threshold !== undefined) {
    form.append("threshold", String(threshold));
  }
  let response: Response;
  try {
    response = await fetch(`${serviceUrl}/v1/classify`, { method: "POST", body: form });
  } catch (err) {
    throw new SubmitError(
      `Could not reach the diagnosis service at ${serviceUrl}: ${String(err)}`,
      null,
      "network_error",
    );
  }
  if (!response.ok) {
    let detail = response.statusText;
    let code = `http_${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.message === "string") {
        detail = body.message;
        code = typeof body.code === "string" ? body.code : code;
      }
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new SubmitError(detail, response.status, code);
  }
  return (await response.json()) as ClassifyResponse;
}

export async function fetchHealth(
  serviceUrl: string,
): Promise<{ status: string; model: string } | null> {
  try {
    const response = await fetch(`${serviceUrl}/v1/health`);
    if (!response.ok) return null;
    return await response.json();
  } catch {
    return null;
  }
}
