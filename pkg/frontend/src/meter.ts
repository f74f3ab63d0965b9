// Meter-map JSON: the same document the analysis toolkit consumes.
// { "movement": "...", "bars": N, "anacrusis_beats": x,
//   "segments": [{ "from_bar": 1, "beats": 4 }, ...] }
// Beats accept numbers or rational strings like "7/2".

export interface MeterSegment {
  fromBar: number;
  beats: number;
}

export interface MeterMap {
  movement: string | null;
  bars: number;
  segments: MeterSegment[];
  anacrusisBeats: number | null;
}

export class MeterMapError extends Error {}

function parseBeats(raw: unknown, path: string): number {
  let value: number;
  if (typeof raw === "number") {
    value = raw;
  } else if (typeof raw === "string" && raw.includes("/")) {
    const [num, den] = raw.split("/", 2).map(Number);
    if (!Number.isFinite(num) || !Number.isFinite(den) || den === 0) {
      throw new MeterMapError(`${path}: malformed rational ${JSON.stringify(raw)}`);
    }
    value = num! / den!;
  } else if (typeof raw === "string") {
    value = Number(raw);
  } else {
    throw new MeterMapError(`${path}: beats must be a number or rational string`);
  }
  if (!Number.isFinite(value) || value <= 0) {
    throw new MeterMapError(`${path}: beats must be positive, got ${raw}`);
  }
  return value;
}

export function parseMeterMap(text: string): MeterMap {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new MeterMapError(`meter map is not valid JSON: ${(err as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new MeterMapError("meter map must be a JSON object");
  }
  const record = doc as Record<string, unknown>;
  const bars = record["bars"];
  if (!Number.isInteger(bars) || (bars as number) < 1) {
    throw new MeterMapError("bars: must be a positive integer");
  }
  const rawSegments = record["segments"];
  if (!Array.isArray(rawSegments) || rawSegments.length === 0) {
    throw new MeterMapError("segments: must be a nonempty array");
  }
  const segments: MeterSegment[] = [];
  rawSegments.forEach((raw, i) => {
    const path = `segments[${i}]`;
    if (typeof raw !== "object" || raw === null) {
      throw new MeterMapError(`${path}: must be an object`);
    }
    const seg = raw as Record<string, unknown>;
    const fromBar = seg["from_bar"];
    if (!Number.isInteger(fromBar) || (fromBar as number) < 1) {
      throw new MeterMapError(`${path}.from_bar: must be a positive integer`);
    }
    segments.push({
      fromBar: fromBar as number,
      beats: parseBeats(seg["beats"], `${path}.beats`),
    });
  });
  if (segments[0]!.fromBar !== 1) {
    throw new MeterMapError(
      `segments: bar 1 uncovered, first segment starts at bar ${segments[0]!.fromBar}`
    );
  }
  for (let i = 1; i < segments.length; i++) {
    if (segments[i]!.fromBar <= segments[i - 1]!.fromBar) {
      throw new MeterMapError("segments: from_bar values must be strictly increasing");
    }
  }
  if (segments[segments.length - 1]!.fromBar > (bars as number)) {
    throw new MeterMapError("segments: a segment starts beyond the last bar");
  }
  let anacrusisBeats: number | null = null;
  if (record["anacrusis_beats"] !== undefined && record["anacrusis_beats"] !== null) {
    anacrusisBeats = parseBeats(record["anacrusis_beats"], "anacrusis_beats");
  }
  const movement =
    typeof record["movement"] === "string" ? (record["movement"] as string) : null;
  return { movement, bars: bars as number, segments, anacrusisBeats };
}

export function beatsForBar(meter: MeterMap, bar: number): number {
  let beats = meter.segments[0]!.beats;
  for (const seg of meter.segments) {
    if (seg.fromBar > bar) break;
    beats = seg.beats;
  }
  return beats;
}
