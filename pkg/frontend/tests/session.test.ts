import { describe, expect, it } from "vitest";

import { AnnotationSession } from "../src/session.js";
import { FakeClock, constantMeter, runningSession } from "./helpers.js";

describe("session lifecycle", () => {
  it("captures cumulative seconds from the downbeat", () => {
    const { session } = runningSession(10, 3);
    expect(session.validLaps().map((l) => l.cumulative)).toEqual([1, 2, 3]);
    expect(session.validLaps().map((l) => l.bar)).toEqual([1, 2, 3]);
  });

  it("ignores presses while idle, with a hint", () => {
    const clock = new FakeClock();
    clock.play();
    const session = new AnnotationSession(clock, constantMeter(4));
    const result = session.press();
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.hint).toMatch(/arm/);
    expect(session.state).toBe("idle");
  });

  it("refuses any capture while playback is paused", () => {
    const { session, clock } = runningSession(10, 2);
    clock.pause();
    const result = session.press();
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.hint).toMatch(/paused/);
    expect(session.barsCaptured()).toBe(2);
  });

  it("refuses the downbeat press while paused", () => {
    const clock = new FakeClock();
    const session = new AnnotationSession(clock, constantMeter(4));
    session.arm();
    expect(session.press().ok).toBe(false);
    expect(session.state).toBe("armed");
  });

  it("rejects a press that does not advance the clock", () => {
    const { session } = runningSession(10, 2);
    const result = session.press(); // same playback instant as lap 2
    expect(result.ok).toBe(false);
    expect(session.barsCaptured()).toBe(2);
  });

  it("moves to reviewing when every bar is captured", () => {
    const { session } = runningSession(3, 3);
    expect(session.state).toBe("reviewing");
    const extra = session.press();
    expect(extra.ok).toBe(false);
  });

  it("stores the anacrusis duration fixed by the downbeat", () => {
    const clock = new FakeClock();
    const session = new AnnotationSession(clock, constantMeter(4));
    session.arm();
    clock.play();
    clock.time = 0.8;
    expect(session.markAnacrusisStart().ok).toBe(true);
    clock.time = 2.3;
    session.press();
    expect(session.anacrusisDuration()).toBeCloseTo(1.5, 12);
  });

  it("anacrusis mark requires running playback", () => {
    const clock = new FakeClock();
    const session = new AnnotationSession(clock, constantMeter(4));
    session.arm();
    expect(session.markAnacrusisStart().ok).toBe(false);
  });
});

describe("undo and redo", () => {
  it("undo removes the last lap and redo restores it", () => {
    const { session } = runningSession(10, 4);
    expect(session.undo()).toBe(true);
    expect(session.barsCaptured()).toBe(3);
    expect(session.redo()).toBe(true);
    expect(session.barsCaptured()).toBe(4);
  });

  it("a fresh press clears the redo stack", () => {
    const { session, clock } = runningSession(10, 3);
    session.undo();
    clock.advance(0.5);
    session.press();
    expect(session.redo()).toBe(false);
  });

  it("undo on an empty session reports false", () => {
    const clock = new FakeClock();
    const session = new AnnotationSession(clock, constantMeter(4));
    expect(session.undo()).toBe(false);
  });

  it("laps stay strictly increasing through undo and redo", () => {
    const { session, clock } = runningSession(20, 6);
    session.undo();
    session.undo();
    session.redo();
    clock.advance(2.5);
    session.press();
    const times = session.validLaps().map((l) => l.cumulative);
    for (let i = 1; i < times.length; i++) {
      expect(times[i]!).toBeGreaterThan(times[i - 1]!);
    }
  });

  it("undo from reviewing returns to running", () => {
    const { session } = runningSession(3, 3);
    expect(session.state).toBe("reviewing");
    session.undo();
    expect(session.state).toBe("running");
  });
});

describe("seeking", () => {
  it("a backward seek marks later laps stale", () => {
    const { session } = runningSession(10, 5); // laps at 1..5 s, downbeat at 2 s
    session.seekTo(2.0 + 2.5); // between laps 2 and 3
    const stale = session.laps().filter((l) => l.stale).map((l) => l.bar);
    expect(stale).toEqual([3, 4, 5]);
    expect(session.validLaps().map((l) => l.bar)).toEqual([1, 2]);
  });

  it("a forward seek leaves everything fresh", () => {
    const { session } = runningSession(10, 4);
    session.seekTo(2.0 + 9.0);
    expect(session.laps().every((l) => !l.stale)).toBe(true);
  });

  it("re-pressing after a backward seek retakes the first stale bar", () => {
    const { session, clock } = runningSession(10, 5);
    session.seekTo(2.0 + 2.5);
    clock.advance(0.65); // playing again from 4.5 s absolute
    const result = session.press();
    expect(result.ok).toBe(true);
    if (result.ok) expect(result.lap!.bar).toBe(3);
    expect(session.validLaps().map((l) => l.bar)).toEqual([1, 2, 3]);
    expect(session.validLaps()[2]!.cumulative).toBeCloseTo(3.15, 12);
    // bars 4 and 5 are still waiting for their retake
    const stale = session.laps().filter((l) => l.stale).map((l) => l.bar);
    expect(stale).toEqual([4, 5]);
  });

  it("seeking backward out of reviewing reopens the session", () => {
    const { session } = runningSession(3, 3);
    expect(session.state).toBe("reviewing");
    session.seekTo(2.0 + 1.5);
    expect(session.state).toBe("running");
    expect(session.barsCaptured()).toBe(1);
  });
});

describe("fermata retakes", () => {
  it("seeks a lead-in before the original press", () => {
    const { session, clock } = runningSession(10, 5);
    session.beginFermataRetake(4, 3); // lap 4 sits at 2 + 4 = 6 s absolute
    expect(clock.time).toBeCloseTo(3.0, 12);
  });

  it("two close candidates resolve to their mean and replace the lap", () => {
    const { session, clock } = runningSession(10, 5);
    const retake = session.beginFermataRetake(4);
    clock.play();
    clock.time = 2.0 + 4.1;
    expect(session.captureFermataCandidate(retake).kind).toBe("need_more");
    session.beginFermataRetake(4);
    clock.time = 2.0 + 4.2;
    const outcome = session.captureFermataCandidate(retake);
    expect(outcome.kind).toBe("resolved");
    const applied = session.applyFermataResolution(retake);
    expect(applied.ok).toBe(true);
    expect(session.validLaps()[3]!.cumulative).toBeCloseTo(4.15, 12);
  });

  it("divergent candidates demand a third, then the closest pair wins", () => {
    const { session, clock } = runningSession(20, 12);
    const retake = session.beginFermataRetake(8);
    clock.play();
    clock.time = 2.0 + 7.8;
    session.captureFermataCandidate(retake);
    clock.time = 2.0 + 8.1;
    expect(session.captureFermataCandidate(retake).kind).toBe("need_third");
    expect(retake.resolution).toBeNull();
    clock.time = 2.0 + 8.12;
    const outcome = session.captureFermataCandidate(retake);
    expect(outcome.kind).toBe("resolved");
    if (outcome.kind === "resolved") expect(outcome.value).toBeCloseTo(8.11, 12);
    expect(session.applyFermataResolution(retake).ok).toBe(true);
  });

  it("rejects a resolution that breaks monotonicity", () => {
    const { session, clock } = runningSession(10, 5);
    const retake = session.beginFermataRetake(3);
    clock.play();
    clock.time = 2.0 + 4.4; // beyond lap 4 at 4.0 s
    session.captureFermataCandidate(retake);
    clock.time = 2.0 + 4.45;
    session.captureFermataCandidate(retake);
    const applied = session.applyFermataResolution(retake);
    expect(applied.ok).toBe(false);
    expect(session.validLaps()[2]!.cumulative).toBe(3);
  });

  it("needs an existing fresh lap", () => {
    const { session } = runningSession(10, 2);
    expect(() => session.beginFermataRetake(7)).toThrow(/no fresh lap/);
  });

  it("candidates cannot be captured while paused", () => {
    const { session, clock } = runningSession(10, 5);
    const retake = session.beginFermataRetake(4);
    clock.pause();
    const outcome = session.captureFermataCandidate(retake);
    expect(outcome.kind).toBe("rejected");
  });
});
