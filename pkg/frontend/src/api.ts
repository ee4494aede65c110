/** Thin client over the service routes; no pixel data is ever recomposed
 * client-side, the overlay URLs point straight at the service PNGs. */

import { UiStroke, encodePayload } from "./strokes.js";

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
}

export interface SolveSummary {
  mask_url: string;
  overlay_url: string;
  wall_time: number;
  jaccard: number | null;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function expectJson(resp: Response): Promise<any> {
  if (!resp.ok) {
    let detail = "";
    try {
      detail = (await resp.json()).error ?? "";
    } catch {
      /* body not json */
    }
    throw new ApiError(resp.status, detail || resp.statusText);
  }
  return resp.json();
}

export async function createSession(pngBytes: ArrayBuffer): Promise<SessionInfo> {
  const resp = await fetch("/sessions", { method: "POST", body: pngBytes });
  return expectJson(resp);
}

export async function attachGroundTruth(id: string, pngBytes: ArrayBuffer): Promise<void> {
  await expectJson(await fetch(`/sessions/${id}/groundtruth`, { method: "POST", body: pngBytes }));
}

export async function postStrokes(
  id: string,
  strokes: UiStroke[],
  mode: "append" | "replace"
): Promise<SolveSummary> {
  const resp = await fetch(`/sessions/${id}/strokes?mode=${mode}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: encodePayload(strokes),
  });
  return expectJson(resp);
}

/** Cache-busted so each refinement shows the fresh PNG. */
export function imageUrl(id: string, kind: "mask" | "overlay", revision: number): string {
  return `/sessions/${id}/${kind}.png?r=${revision}`;
}
