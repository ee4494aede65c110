/** Session state and the pure transition helpers driving the UI.
 *
 * The busy flag gates submission; the stroke history doubles as the undo
 * stack; `pendingFrom` marks how much of the history has already been sent
 * so append-mode submissions only carry the new strokes.
 */

import { UiStroke } from "./strokes.js";

export type OverlayKind = "mask" | "overlay";

export interface UiState {
  sessionId: string | null;
  width: number;
  height: number;
  history: UiStroke[];
  pendingFrom: number; // index of the first not-yet-submitted stroke
  busy: boolean;
  overlayKind: OverlayKind;
  overlayUrl: string | null;
  statusLines: string[];
}

export function initialState(): UiState {
  return {
    sessionId: null,
    width: 0,
    height: 0,
    history: [],
    pendingFrom: 0,
    busy: false,
    overlayKind: "overlay",
    overlayUrl: null,
    statusLines: [],
  };
}

export function startSession(state: UiState, id: string, width: number, height: number): UiState {
  return { ...initialState(), sessionId: id, width, height, overlayKind: state.overlayKind };
}

export function pushStroke(state: UiState, stroke: UiStroke): UiState {
  if (stroke.points.length === 0) return state;
  return { ...state, history: [...state.history, stroke] };
}

/** Pops at most to empty; submitted strokes can be undone too (a replace
 * submit then rebuilds the full set). */
export function undo(state: UiState): UiState {
  if (state.history.length === 0) return state;
  const history = state.history.slice(0, -1);
  return {
    ...state,
    history,
    pendingFrom: Math.min(state.pendingFrom, history.length),
  };
}

export function hasBothClasses(strokes: UiStroke[]): boolean {
  return (
    strokes.some((s) => s.label === "fg" && s.points.length > 0) &&
    strokes.some((s) => s.label === "bg" && s.points.length > 0)
  );
}

export function canSubmit(state: UiState): boolean {
  return !state.busy && state.sessionId !== null && hasBothClasses(state.history);
}

export function pendingStrokes(state: UiState): UiStroke[] {
  return state.history.slice(state.pendingFrom);
}

export function beginSubmit(state: UiState): UiState {
  return { ...state, busy: true };
}

export function submitOk(state: UiState, overlayUrl: string, latencyMs: number, jaccard: number | null): UiState {
  let line = `solved in ${(latencyMs / 1000).toFixed(2)} s`;
  if (jaccard !== null) line += `, Jaccard ${jaccard.toFixed(3)}`;
  return {
    ...state,
    busy: false,
    pendingFrom: state.history.length,
    overlayUrl,
    statusLines: [...state.statusLines, line],
  };
}

export function submitFailed(state: UiState, message: string): UiState {
  return { ...state, busy: false, statusLines: [...state.statusLines, message] };
}

export function statusForHttpError(code: number): string {
  if (code === 409) return "computing… try again in a moment";
  if (code === 422) return "add at least one foreground and one background stroke";
  return `request failed (${code})`;
}

export function toggleOverlayKind(state: UiState): UiState {
  return { ...state, overlayKind: state.overlayKind === "overlay" ? "mask" : "overlay" };
}
