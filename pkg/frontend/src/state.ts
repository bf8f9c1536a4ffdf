import type { ClassifyResponse, ViewState } from "./types";

export function initialState(serviceUrl: string): ViewState {
  return { phase: "idle", lastResponse: null, serviceUrl, errorMessage: null };
}

/**
 * Apply a service response.  The phase is derived purely from the response's
 * recommendation field: the client never re-computes the confidence rule.
 */
export function applyResponse(state: ViewState, response: ClassifyResponse): ViewState {
  return {
    ...state,
    phase: response.recommendation !== null ? "retake-advised" : "diagnosed",
    lastResponse: response,
    errorMessage: null,
  };
}

export function applyError(state: ViewState, message: string): ViewState {
  return { ...state, phase: "error", errorMessage: message };
}

export function beginSubmit(state: ViewState): ViewState {
  return { ...state, phase: "submitting", errorMessage: null };
}

export function beginCapture(state: ViewState): ViewState {
  return { ...state, phase: "capturing", errorMessage: null };
}
