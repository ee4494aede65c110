/** Stroke model and its wire encoding.
 *
 * A stroke is a polyline in image coordinates with a label and brush radius.
 * The wire format is exactly the service's StrokePayload, so encode/decode
 * round-trips bit-for-bit.
 */

export type Label = "fg" | "bg";

export interface UiStroke {
  label: Label;
  points: [number, number][]; // (x, y) image coordinates
  radius: number;
}

export interface StrokePayload {
  strokes: UiStroke[];
}

export function clampPoint(
  x: number,
  y: number,
  width: number,
  height: number
): [number, number] {
  return [
    Math.min(Math.max(x, 0), width - 1),
    Math.min(Math.max(y, 0), height - 1),
  ];
}

export function beginStroke(label: Label, radius: number): UiStroke {
  return { label, points: [], radius };
}

export function extendStroke(
  stroke: UiStroke,
  x: number,
  y: number,
  width: number,
  height: number
): UiStroke {
  return { ...stroke, points: [...stroke.points, clampPoint(x, y, width, height)] };
}

export function encodePayload(strokes: UiStroke[]): string {
  return JSON.stringify({ strokes });
}

export function decodePayload(text: string): StrokePayload {
  const raw = JSON.parse(text);
  if (!raw || !Array.isArray(raw.strokes)) {
    throw new Error("payload has no stroke list");
  }
  for (const s of raw.strokes) {
    if (s.label !== "fg" && s.label !== "bg") throw new Error(`bad label ${s.label}`);
    if (!Array.isArray(s.points)) throw new Error("stroke has no points");
    if (typeof s.radius !== "number") throw new Error("stroke has no radius");
  }
  return raw as StrokePayload;
}

export function strokeColor(label: Label): string {
  return label === "fg" ? "#00ff00" : "#ff0000";
}
