// Static-page wiring: no server, no storage; audio comes from a local
// file, results leave as downloads. Keyboard is single-hand while
// following a score: space = lap, backspace = undo, F = fermata retake.

import { ExportError, lapCsv, metadataJson } from "./export.js";
import { FermataRetake } from "./fermata.js";
import { MeterMap, MeterMapError, parseMeterMap } from "./meter.js";
import { AnnotationSession, AudioClock } from "./session.js";

const audioInput = document.getElementById("audio-file") as HTMLInputElement;
const meterInput = document.getElementById("meter-file") as HTMLInputElement;
const audio = document.getElementById("player") as HTMLAudioElement;
const armButton = document.getElementById("arm") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const redoButton = document.getElementById("redo") as HTMLButtonElement;
const anacrusisButton = document.getElementById("anacrusis") as HTMLButtonElement;
const exportCsvButton = document.getElementById("export-csv") as HTMLButtonElement;
const exportMetaButton = document.getElementById("export-meta") as HTMLButtonElement;
const performerField = document.getElementById("performer") as HTMLInputElement;
const yearField = document.getElementById("year") as HTMLInputElement;
const fermataBarField = document.getElementById("fermata-bar") as HTMLInputElement;
const fermataButton = document.getElementById("fermata") as HTMLButtonElement;
const statusLine = document.getElementById("status")!;
const hintLine = document.getElementById("hint")!;
const latencyLine = document.getElementById("latency")!;
const lapTableBody = document.querySelector("#laps tbody") as HTMLElement;

let meter: MeterMap | null = null;
let session: AnnotationSession | null = null;
let retake: FermataRetake | null = null;

class ElementClock implements AudioClock {
  constructor(private readonly element: HTMLAudioElement) {}
  currentTime(): number {
    return this.element.currentTime;
  }
  paused(): boolean {
    return this.element.paused;
  }
  seek(seconds: number): void {
    this.element.currentTime = seconds;
  }
}

function setHint(text: string): void {
  hintLine.textContent = text;
}

function refresh(): void {
  if (session === null) {
    statusLine.textContent = meter === null
      ? "load audio and a meter map"
      : `meter loaded: ${meter.bars} bars; load audio and arm`;
    return;
  }
  const captured = session.barsCaptured();
  const total = session.meter.bars;
  const stale = session.laps().length - captured;
  statusLine.textContent =
    `state: ${session.state} | bars: ${captured}/${total}` +
    (stale > 0 ? ` | stale: ${stale} (retake them)` : "") +
    (retake !== null ? ` | fermata retake of bar ${retake.bar}: ${retake.candidates.length} candidate(s)` : "");
  lapTableBody.replaceChildren(
    ...session.laps().map((lap) => {
      const row = document.createElement("tr");
      row.innerHTML =
        `<td>${lap.bar}</td><td>${lap.cumulative.toFixed(3)}</td>` +
        `<td>${lap.stale ? "stale" : "ok"}</td>`;
      if (lap.stale) row.classList.add("stale");
      return row;
    })
  );
  const exportable = captured > 0;
  exportCsvButton.disabled = !exportable;
  exportMetaButton.disabled = !exportable;
}

function download(name: string, text: string, type: string): void {
  const blob = new Blob([text], { type });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = name;
  link.click();
  URL.revokeObjectURL(url);
}

audioInput.addEventListener("change", () => {
  const file = audioInput.files?.[0];
  if (!file) return;
  audio.src = URL.createObjectURL(file);
  setHint(`audio loaded: ${file.name}`);
  refresh();
});

meterInput.addEventListener("change", async () => {
  const file = meterInput.files?.[0];
  if (!file) return;
  try {
    meter = parseMeterMap(await file.text());
    session = null;
    setHint(`meter map: ${meter.bars} bars`);
  } catch (err) {
    if (err instanceof MeterMapError) setHint(err.message);
    else throw err;
  }
  refresh();
});

armButton.addEventListener("click", () => {
  if (meter === null) {
    setHint("load a meter map first");
    return;
  }
  if (!audio.src) {
    setHint("load an audio file first");
    return;
  }
  session = new AnnotationSession(new ElementClock(audio), meter);
  session.arm();
  retake = null;
  setHint("armed: start playback and press space at the downbeat");
  refresh();
});

function pressLap(eventTimeMs: number): void {
  if (session === null) {
    setHint("arm a session first");
    return;
  }
  // the clock is read synchronously inside the handler; show how far
  // behind the key event that read happened, as a calibration aid
  latencyLine.textContent = `key-to-clock latency: ${(performance.now() - eventTimeMs).toFixed(1)} ms`;
  if (retake !== null) {
    const outcome = session.captureFermataCandidate(retake);
    if (outcome.kind === "rejected") {
      setHint(outcome.hint);
    } else if (outcome.kind === "need_more") {
      setHint("one candidate taken; replay and capture a second");
    } else if (outcome.kind === "need_third") {
      setHint("candidates diverge by more than 0.2 s: capture a third");
    } else {
      const applied = session.applyFermataResolution(retake);
      setHint(applied.ok ? `bar ${retake.bar} re-timed to ${retake.resolution!.toFixed(3)} s` : applied.hint);
      if (applied.ok) retake = null;
    }
    refresh();
    return;
  }
  const result = session.press();
  setHint(result.ok ? (result.downbeat ? "downbeat marked" : `bar ${result.lap!.bar} captured`) : result.hint);
  refresh();
}

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement) return;
  if (event.code === "Space") {
    event.preventDefault();
    pressLap(event.timeStamp);
  } else if (event.code === "Backspace") {
    event.preventDefault();
    if (session?.undo()) setHint("last lap removed");
    refresh();
  } else if (event.code === "KeyY") {
    if (session?.redo()) setHint("lap restored");
    refresh();
  } else if (event.code === "KeyF") {
    fermataBarField.focus();
  }
});

undoButton.addEventListener("click", () => {
  if (session?.undo()) setHint("last lap removed");
  refresh();
});

redoButton.addEventListener("click", () => {
  if (session?.redo()) setHint("lap restored");
  refresh();
});

anacrusisButton.addEventListener("click", () => {
  if (session === null) return;
  const result = session.markAnacrusisStart();
  setHint(result.ok ? "anacrusis start marked; press space at the downbeat" : result.hint);
});

fermataButton.addEventListener("click", () => {
  if (session === null) return;
  const bar = Number(fermataBarField.value);
  try {
    retake = session.beginFermataRetake(bar);
    setHint(`replaying toward bar ${bar}; press space at the barline`);
  } catch (err) {
    setHint((err as Error).message);
  }
  refresh();
});

audio.addEventListener("seeked", () => {
  session?.noteSeek(audio.currentTime);
  refresh();
});

exportCsvButton.addEventListener("click", () => {
  if (session === null) return;
  try {
    download("laps.csv", lapCsv(session), "text/csv");
  } catch (err) {
    if (err instanceof ExportError) setHint(err.message);
    else throw err;
  }
});

exportMetaButton.addEventListener("click", () => {
  if (session === null) return;
  try {
    download(
      "laps.meta.json",
      metadataJson(session, {
        performer: performerField.value || "unknown",
        year: Number(yearField.value) || 0,
      }),
      "application/json"
    );
  } catch (err) {
    if (err instanceof ExportError) setHint(err.message);
    else throw err;
  }
});

refresh();
