// Export: the canonical lap CSV the analysis toolkit ingests, plus a
// metadata JSON sidecar. Timestamps are seconds from the downbeat at
// full precision; the CSV is guaranteed strictly increasing because the
// session never lets a non-increasing lap in.

import { AnnotationSession } from "./session.js";

export class ExportError extends Error {}

export function lapCsv(session: AnnotationSession): string {
  const laps = session.validLaps();
  if (laps.length === 0) {
    throw new ExportError("nothing to export: no laps captured");
  }
  const lines = ["bar,cumulative"];
  for (const lap of laps) {
    lines.push(`${lap.bar},${lap.cumulative}`);
  }
  return lines.join("\n") + "\n";
}

export interface RecordingIdentity {
  performer: string;
  year: number;
}

export function metadataJson(
  session: AnnotationSession,
  identity: RecordingIdentity
): string {
  const laps = session.validLaps();
  if (laps.length === 0) {
    throw new ExportError("nothing to export: no laps captured");
  }
  const doc = {
    performer: identity.performer,
    year: identity.year,
    movement: session.meter.movement,
    bars_captured: laps.length,
    total_duration: laps[laps.length - 1]!.cumulative,
    anacrusis_duration: session.anacrusisDuration(),
  };
  return JSON.stringify(doc, null, 2) + "\n";
}
