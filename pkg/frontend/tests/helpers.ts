import { MeterMap } from "../src/meter.js";
import { AnnotationSession, AudioClock } from "../src/session.js";

/** Scriptable playback clock standing in for an audio element. */
export class FakeClock implements AudioClock {
  time = 0;
  isPaused = true;

  currentTime(): number {
    return this.time;
  }

  paused(): boolean {
    return this.isPaused;
  }

  seek(seconds: number): void {
    this.time = seconds;
  }

  play(): void {
    this.isPaused = false;
  }

  pause(): void {
    this.isPaused = true;
  }

  advance(seconds: number): void {
    if (!this.isPaused) this.time += seconds;
  }
}

export function constantMeter(bars: number, beats = 4): MeterMap {
  return {
    movement: "test-mvt",
    bars,
    segments: [{ fromBar: 1, beats }],
    anacrusisBeats: null,
  };
}

/** Arm, set the downbeat, and capture `laps` bars one second apart. */
export function runningSession(
  bars: number,
  laps: number,
  spacing = 1.0
): { session: AnnotationSession; clock: FakeClock } {
  const clock = new FakeClock();
  const session = new AnnotationSession(clock, constantMeter(bars));
  session.arm();
  clock.play();
  clock.time = 2.0; // the downbeat sits two seconds into the track
  if (!session.press().ok) throw new Error("downbeat press failed");
  for (let i = 0; i < laps; i++) {
    clock.advance(spacing);
    const result = session.press();
    if (!result.ok) throw new Error(`lap ${i + 1} failed: ${result.hint}`);
  }
  return { session, clock };
}
