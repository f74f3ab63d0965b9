import { describe, expect, it } from "vitest";

import { addCandidate, resolveCandidates } from "../src/fermata.js";

describe("resolveCandidates", () => {
  it("averages a pair within the divergence limit", () => {
    const outcome = resolveCandidates([10.0, 10.15]);
    expect(outcome).toEqual({ kind: "resolved", value: 10.075 });
  });

  it("demands a third take for a divergent pair", () => {
    expect(resolveCandidates([10.0, 10.3]).kind).toBe("need_third");
  });

  it("averages the closest pair of three", () => {
    const outcome = resolveCandidates([10.0, 10.3, 10.28]);
    expect(outcome.kind).toBe("resolved");
    if (outcome.kind === "resolved") expect(outcome.value).toBeCloseTo(10.29, 12);
  });

  it("is order independent", () => {
    const orders: number[][] = [
      [10.0, 10.3, 10.28],
      [10.3, 10.0, 10.28],
      [10.28, 10.3, 10.0],
    ];
    const values = orders.map((candidates) => {
      const outcome = resolveCandidates(candidates);
      return outcome.kind === "resolved" ? outcome.value : NaN;
    });
    expect(new Set(values).size).toBe(1);
  });

  it("breaks an equal-gap tie toward the lower pair", () => {
    const outcome = resolveCandidates([10.0, 10.1, 10.2]);
    expect(outcome.kind).toBe("resolved");
    if (outcome.kind === "resolved") expect(outcome.value).toBeCloseTo(10.05, 12);
  });

  it("asks for more below two candidates", () => {
    expect(resolveCandidates([10.0]).kind).toBe("need_more");
  });
});

describe("addCandidate", () => {
  it("tracks the retake state across captures", () => {
    const retake = { bar: 5, candidates: [], resolution: null };
    expect(addCandidate(retake, 10.0).kind).toBe("need_more");
    expect(addCandidate(retake, 10.3).kind).toBe("need_third");
    expect(retake.resolution).toBeNull();
    const final = addCandidate(retake, 10.28);
    expect(final.kind).toBe("resolved");
    expect(retake.resolution).toBeCloseTo(10.29, 12);
  });

  it("refuses a fourth candidate", () => {
    const retake = { bar: 1, candidates: [1, 2, 3], resolution: null };
    expect(() => addCandidate(retake, 4)).toThrow(/at most three/);
  });
});
