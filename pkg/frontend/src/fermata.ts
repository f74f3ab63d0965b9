// Fermata re-measurement: repeated timings of one obscured barline are
// combined with the same rule the analysis toolkit applies server-side,
// so a session resolved in the browser and one resolved offline agree.

export const FERMATA_DIVERGENCE_LIMIT = 0.2; // seconds

export type FermataOutcome =
  | { kind: "need_more" }
  | { kind: "need_third" }
  | { kind: "resolved"; value: number };

export interface FermataRetake {
  bar: number;
  candidates: number[];
  resolution: number | null;
}

/**
 * Combine 1..3 candidate timings.
 *
 * One candidate is not enough. Two within the divergence limit average;
 * two beyond it demand a third take. With three, the closest pair
 * averages; equal gaps prefer the pair containing the median, then the
 * pair with the smaller values. Order of the candidates never matters.
 */
export function resolveCandidates(
  candidates: readonly number[],
  divergenceLimit: number = FERMATA_DIVERGENCE_LIMIT
): FermataOutcome {
  if (candidates.length < 2) return { kind: "need_more" };
  const sorted = [...candidates].sort((a, b) => a - b);
  if (sorted.length === 2) {
    const [lo, hi] = sorted as [number, number];
    if (hi - lo > divergenceLimit) return { kind: "need_third" };
    return { kind: "resolved", value: (lo + hi) / 2 };
  }
  const [a, b, c] = sorted as [number, number, number];
  const median = b;
  const pairs: Array<[number, number]> = [
    [a, b],
    [b, c],
    [a, c],
  ];
  const rank = (pair: [number, number]): [number, number, number] => [
    pair[1] - pair[0],
    pair[0] === median || pair[1] === median ? 0 : 1,
    pair[0],
  ];
  let best = pairs[0]!;
  let bestRank = rank(best);
  for (const pair of pairs.slice(1)) {
    const r = rank(pair);
    if (
      r[0] < bestRank[0] ||
      (r[0] === bestRank[0] &&
        (r[1] < bestRank[1] || (r[1] === bestRank[1] && r[2] < bestRank[2])))
    ) {
      best = pair;
      bestRank = r;
    }
  }
  return { kind: "resolved", value: (best[0] + best[1]) / 2 };
}

/** Record one more candidate and update the retake's resolution state. */
export function addCandidate(
  retake: FermataRetake,
  seconds: number
): FermataOutcome {
  if (retake.candidates.length >= 3) {
    throw new Error("a fermata retake takes at most three measurements");
  }
  retake.candidates.push(seconds);
  const outcome = resolveCandidates(retake.candidates);
  retake.resolution = outcome.kind === "resolved" ? outcome.value : null;
  return outcome;
}
