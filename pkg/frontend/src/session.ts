// The annotation session state machine.
//
// All times come from the audio element's playback position, never from
// the wall clock: pausing playback freezes the timebase, and a capture
// while paused is structurally impossible. The downbeat press defines
// second zero; every later lap stores cumulative seconds from it, which
// is exactly what the lap CSV format carries.

import { addCandidate, FermataOutcome, FermataRetake } from "./fermata.js";
import { MeterMap } from "./meter.js";

export type SessionState = "idle" | "armed" | "running" | "reviewing";

/** Playback clock abstraction; an HTMLAudioElement satisfies it. */
export interface AudioClock {
  currentTime(): number;
  paused(): boolean;
  seek(seconds: number): void;
}

export interface Lap {
  bar: number;
  /** Seconds from the movement's downbeat to this barline press. */
  cumulative: number;
  /** Invalidated by a backward seek; excluded from export until retaken. */
  stale: boolean;
}

export type PressResult =
  | { ok: true; downbeat: boolean; lap: Lap | null }
  | { ok: false; hint: string };

const MIN_LAP_GAP = 1e-6; // seconds; two presses cannot share one instant

export class AnnotationSession {
  private readonly clock: AudioClock;
  readonly meter: MeterMap;
  private laps_: Lap[] = [];
  private redoStack: Lap[] = [];
  private state_: SessionState = "idle";
  private downbeat: number | null = null;
  private anacrusisMark: number | null = null;

  constructor(clock: AudioClock, meter: MeterMap) {
    this.clock = clock;
    this.meter = meter;
  }

  get state(): SessionState {
    return this.state_;
  }

  /** All laps, stale ones included (for display). */
  laps(): readonly Lap[] {
    return this.laps_;
  }

  /** The exportable laps: the unbroken fresh prefix. */
  validLaps(): Lap[] {
    return this.laps_.filter((lap) => !lap.stale);
  }

  barsCaptured(): number {
    return this.validLaps().length;
  }

  anacrusisDuration(): number | null {
    if (this.anacrusisMark === null || this.downbeat === null) return null;
    const span = this.downbeat - this.anacrusisMark;
    return span > 0 ? span : null;
  }

  /** Ready the session: the next press will mark the downbeat. */
  arm(): void {
    if (this.state_ !== "idle") {
      throw new Error(`cannot arm from state ${this.state_}`);
    }
    this.state_ = "armed";
  }

  /**
   * Mark the start of pickup notes before the first full bar. Must
   * happen while armed, before the downbeat press; the downbeat then
   * fixes the anacrusis duration.
   */
  markAnacrusisStart(): PressResult {
    if (this.state_ !== "armed") {
      return { ok: false, hint: "arm the session before marking the anacrusis" };
    }
    if (this.clock.paused()) {
      return { ok: false, hint: "cannot mark while playback is paused" };
    }
    this.anacrusisMark = this.clock.currentTime();
    return { ok: true, downbeat: false, lap: null };
  }

  /**
   * The lap key. While armed it fixes the downbeat (second zero); while
   * running it captures the next barline. Ignored, with a hint, in any
   * other state or while playback is paused.
   */
  press(): PressResult {
    if (this.clock.paused()) {
      return { ok: false, hint: "playback is paused; laps come from the audio clock" };
    }
    switch (this.state_) {
      case "idle":
        return { ok: false, hint: "load audio and arm the session first" };
      case "reviewing":
        return { ok: false, hint: "all bars are captured; undo or export" };
      case "armed": {
        this.downbeat = this.clock.currentTime();
        this.state_ = "running";
        this.redoStack = [];
        return { ok: true, downbeat: true, lap: null };
      }
      case "running":
        return this.captureLap();
    }
  }

  private captureLap(): PressResult {
    const valid = this.validLaps();
    const bar = valid.length + 1;
    if (bar > this.meter.bars) {
      return { ok: false, hint: `all ${this.meter.bars} bars are captured` };
    }
    const cumulative = this.clock.currentTime() - (this.downbeat as number);
    const floor = valid.length > 0 ? valid[valid.length - 1]!.cumulative : 0;
    if (cumulative <= floor + MIN_LAP_GAP) {
      return {
        ok: false,
        hint: `lap must land after ${floor.toFixed(3)} s (got ${cumulative.toFixed(3)} s)`,
      };
    }
    const lap: Lap = { bar, cumulative, stale: false };
    // a retaken bar replaces its stale ghost; anything staler stays for
    // later retakes
    this.laps_ = [...valid, lap, ...this.laps_.filter((l) => l.stale && l.bar > bar)];
    this.redoStack = [];
    if (bar === this.meter.bars) {
      this.state_ = "reviewing";
    }
    return { ok: true, downbeat: false, lap };
  }

  /** Drop the most recent fresh lap. */
  undo(): boolean {
    const valid = this.validLaps();
    if (valid.length === 0) return false;
    const last = valid[valid.length - 1]!;
    this.laps_ = this.laps_.filter((lap) => lap !== last);
    this.redoStack.push(last);
    if (this.state_ === "reviewing") this.state_ = "running";
    return true;
  }

  redo(): boolean {
    const lap = this.redoStack.pop();
    if (lap === undefined) return false;
    const valid = this.validLaps();
    const expectedBar = valid.length + 1;
    const floor = valid.length > 0 ? valid[valid.length - 1]!.cumulative : 0;
    if (lap.bar !== expectedBar || lap.cumulative <= floor) {
      this.redoStack = [];
      return false;
    }
    this.laps_ = [...valid, lap, ...this.laps_.filter((l) => l.stale && l.bar > lap.bar)];
    if (lap.bar === this.meter.bars) this.state_ = "reviewing";
    return true;
  }

  /**
   * Follow a playback seek. Seeking backward invalidates every lap
   * captured after the seek point; they stay visible but leave the
   * export until retaken.
   */
  seekTo(seconds: number): void {
    this.clock.seek(seconds);
    this.noteSeek(seconds);
  }

  /** Register a seek that already happened on the audio element. */
  noteSeek(seconds: number): void {
    if (this.downbeat === null) return;
    const cutoff = seconds - this.downbeat;
    let changed = false;
    this.laps_ = this.laps_.map((lap) => {
      if (!lap.stale && lap.cumulative > cutoff) {
        changed = true;
        return { ...lap, stale: true };
      }
      return lap;
    });
    if (changed) {
      this.redoStack = [];
      if (this.state_ === "reviewing") this.state_ = "running";
    }
  }

  /**
   * Start re-measuring the barline that ends `bar`, seeking playback a
   * lead-in ahead of the original press so the passage can be heard
   * before the capture.
   */
  beginFermataRetake(bar: number, leadInSeconds = 3): FermataRetake {
    const lap = this.validLaps().find((l) => l.bar === bar);
    if (lap === undefined) {
      throw new Error(`bar ${bar} has no fresh lap to re-measure`);
    }
    const target = Math.max(0, (this.downbeat as number) + lap.cumulative - leadInSeconds);
    this.clock.seek(target);
    return { bar, candidates: [], resolution: null };
  }

  /** Capture one fermata candidate at the current playback position. */
  captureFermataCandidate(retake: FermataRetake): FermataOutcome | { kind: "rejected"; hint: string } {
    if (this.clock.paused()) {
      return { kind: "rejected", hint: "playback is paused" };
    }
    if (this.downbeat === null) {
      return { kind: "rejected", hint: "no downbeat reference yet" };
    }
    const cumulative = this.clock.currentTime() - this.downbeat;
    if (cumulative <= 0) {
      return { kind: "rejected", hint: "candidate lies before the downbeat" };
    }
    return addCandidate(retake, cumulative);
  }

  /**
   * Replace the retaken bar's lap with the resolved value. Refuses a
   * resolution that would break the strictly-increasing invariant.
   */
  applyFermataResolution(retake: FermataRetake): PressResult {
    if (retake.resolution === null) {
      return { ok: false, hint: "no resolution yet; capture more candidates" };
    }
    const valid = this.validLaps();
    const index = valid.findIndex((l) => l.bar === retake.bar);
    if (index < 0) {
      return { ok: false, hint: `bar ${retake.bar} has no fresh lap` };
    }
    const before = index > 0 ? valid[index - 1]!.cumulative : 0;
    const after = index + 1 < valid.length ? valid[index + 1]!.cumulative : Infinity;
    if (retake.resolution <= before || retake.resolution >= after) {
      return {
        ok: false,
        hint:
          `resolution ${retake.resolution.toFixed(3)} s does not fit between ` +
          `neighbouring laps (${before.toFixed(3)} .. ${after === Infinity ? "end" : after.toFixed(3)})`,
      };
    }
    const replacement: Lap = { bar: retake.bar, cumulative: retake.resolution, stale: false };
    this.laps_ = this.laps_.map((lap) =>
      !lap.stale && lap.bar === retake.bar ? replacement : lap
    );
    this.redoStack = [];
    return { ok: true, downbeat: false, lap: replacement };
  }
}
