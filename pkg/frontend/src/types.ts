export type ClassifyResponse = {
  label: string;
  confidence: number;
  per_class: Record<string, number>;
  recommendation: string | null;
  model: string;
  latency_ms: number;
};

export type ServiceError = {
  code: string;
  message: string;
};

export type Phase =
  | "idle"
  | "capturing"
  | "submitting"
  | "diagnosed"
  | "retake-advised"
  | "error";

export type ViewState = {
  phase: Phase;
  lastResponse: ClassifyResponse | null;
  serviceUrl: string;
  errorMessage: string | null;
};

/** Human names for the wire labels, in class-code order. */
export const DISPLAY_NAMES: Record<string, string> = {
  black_sigatoka: "Black Sigatoka",
  fusarium_wilt_race1: "Fusarium wilt race 1",
  healthy: "Healthy",
};

export const CLASS_ORDER = ["black_sigatoka", "fusarium_wilt_race1", "healthy"];

export function displayName(label: string): string {
  return DISPLAY_NAMES[label] ?? label;
}
